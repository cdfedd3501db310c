import numpy as np
import pytest

import synth
from roimark import (
    BadVersion,
    CapacityExceeded,
    EmptyKey,
    GrayImage,
    InsufficientRoni,
    KeyInvalid,
    NonAsciiEpr,
    NotAuthentic,
    PayloadState,
    Region,
    RoiOutOfBounds,
    RoiRect,
    TamperSpec,
    apply_tamper,
    block_average,
    block_pixels,
    block_permutation,
    border_coordinates,
    embed,
    extract_header,
    recover,
    restore,
    roi_block_averages,
    segment,
    validate_key,
    verify,
)

K1 = "k1-secret"
K = 7


@pytest.fixture
def marked_setup():
    image = synth.shapes(size=128, seed=11)
    roi = RoiRect(24, 24, 64, 64)
    epr = b"NAME: DOE, J; ID: 0042; DOB: 1970-01-01"
    result = embed(image, roi, epr, K1, K)
    return image, roi, epr, result


def roi_crop(image, roi):
    return image.pixels[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w]


class TestEmbed:
    def test_roundtrip_authentic(self, marked_setup):
        image, roi, epr, result = marked_setup
        report = verify(result.watermarked, K1, K)
        assert report.authentic
        assert report.epr == epr
        assert report.tampered_blocks == ()
        assert report.payload_state is PayloadState.OK
        assert report.block_comparisons == 0

    def test_stats(self, marked_setup):
        image, roi, epr, result = marked_setup
        stats = result.stats
        assert stats.w_bits == 128 + roi.area + 8 * len(epr)
        assert stats.w_comp_bits == result.header.payload_len_bits
        assert stats.compression_ratio == stats.w_comp_bits / stats.w_bits
        assert stats.roi_blocks == roi.n_blocks
        assert stats.roni_blocks_used == roi.n_blocks

    def test_distortion_bound(self, marked_setup):
        image, _, _, result = marked_setup
        diff = np.abs(
            result.watermarked.pixels.astype(np.int16) - image.pixels.astype(np.int16)
        )
        assert diff.max() <= 1
        assert result.stats.psnr_db >= 48.13

    def test_only_designated_pixels_change(self, marked_setup):
        image, roi, _, result = marked_setup
        rmap = segment(image, roi)
        key = validate_key(K, rmap.n_roi_blocks, rmap.n_roni_blocks)

        allowed = np.zeros(image.pixels.shape, dtype=bool)
        n_payload = result.header.payload_len_bits
        flat_idx = np.arange(n_payload)
        allowed[roi.y + flat_idx // roi.w, roi.x + flat_idx % roi.w] = True
        anchors = rmap.roni_block_anchors[block_permutation(key)]
        dy = np.array([0, 0, 0, 1, 1, 1, 2, 2])
        dx = np.array([0, 1, 2, 0, 1, 2, 0, 1])
        allowed[(anchors[:, 0:1] + dy).ravel(), (anchors[:, 1:2] + dx).ravel()] = True
        bc = border_coordinates(image.width, image.height)[:120]
        allowed[bc[:, 0], bc[:, 1]] = True

        changed = result.watermarked.pixels != image.pixels
        assert not np.any(changed & ~allowed)

    def test_roi_lsbs_beyond_payload_unchanged(self, marked_setup):
        image, roi, _, result = marked_setup
        n = result.header.payload_len_bits
        assert n < roi.area  # the payload actually compressed
        before = (roi_crop(image, roi) & 1).reshape(-1)
        after = (roi_crop(result.watermarked, roi) & 1).reshape(-1)
        assert np.array_equal(before[n:], after[n:])

    def test_recovery_data_readable(self, marked_setup):
        # each mapped RONI block carries the block's masked average, MSB first
        image, roi, _, result = marked_setup
        rmap = segment(image, roi)
        key = validate_key(K, rmap.n_roi_blocks, rmap.n_roni_blocks)
        averages = roi_block_averages(image.pixels, roi)
        arr = result.watermarked.pixels
        perm = block_permutation(key)
        for i in (0, 1, rmap.n_roi_blocks // 2, rmap.n_roi_blocks - 1):
            ay, ax = rmap.roni_block_anchors[perm[i]]
            bits = [
                int(arr[ay + d // 3, ax + d % 3] & 1) for d in range(8)
            ]
            value = int("".join(map(str, bits)), 2)
            assert value == averages[i]

    def test_full_scale_reference_config(self):
        # 256x256 carrier, 200x192 region (2400 blocks), 0.5 KB record
        image = synth.shapes(size=256, seed=1)
        roi = RoiRect(28, 28, 200, 192)
        result = embed(image, roi, b"x" * 512, K1, K)
        assert result.stats.roi_blocks == 2400
        assert result.stats.roni_blocks_used == 2400
        rmap = segment(image, roi)
        key = validate_key(K, rmap.n_roi_blocks, rmap.n_roni_blocks)
        carriers = block_permutation(key)
        assert len(set(carriers.tolist())) == 2400  # all carriers distinct
        assert verify(result.watermarked, K1, K).authentic

    def test_empty_key_rejected(self, marked_setup):
        image, roi, epr, _ = marked_setup
        with pytest.raises(EmptyKey):
            embed(image, roi, epr, "", K)

    def test_non_ascii_epr_rejected(self, marked_setup):
        image, roi, _, _ = marked_setup
        with pytest.raises(NonAsciiEpr):
            embed(image, roi, b"\xff\xfe", K1, K)

    def test_invalid_mapping_key(self, marked_setup):
        image, roi, epr, _ = marked_setup
        with pytest.raises(KeyInvalid):
            embed(image, roi, epr, K1, 4)  # not prime

    def test_insufficient_roni(self):
        image = GrayImage(np.full((24, 24), 80, dtype=np.uint8))
        with pytest.raises(InsufficientRoni):
            embed(image, RoiRect(4, 4, 16, 16), b"", K1, 3)

    def test_capacity_exceeded_on_incompressible_plane(self, rng):
        # dense random ROI LSBs expand under RLE instead of compressing
        arr = np.full((96, 96), 120, dtype=np.uint8)
        arr[20:84, 20:84] |= rng.integers(0, 2, size=(64, 64), dtype=np.uint8)
        image = GrayImage(arr)
        before = image.pixels.copy()
        with pytest.raises(CapacityExceeded):
            embed(image, RoiRect(20, 20, 64, 64), b"x" * 512, K1, K)
        assert np.array_equal(image.pixels, before)


class TestHeaderExtraction:
    def test_matches_written_header(self, marked_setup):
        _, _, _, result = marked_setup
        assert extract_header(result.watermarked, K1) == result.header

    def test_wrong_key_mostly_bad_version(self, marked_setup):
        _, _, _, result = marked_setup
        outcomes = []
        for i in range(50):
            try:
                extract_header(result.watermarked, f"wrong-{i}")
                outcomes.append("decoded")
            except BadVersion:
                outcomes.append("bad_version")
            except RoiOutOfBounds:
                outcomes.append("bad_roi")
        assert "decoded" not in outcomes
        assert outcomes.count("bad_version") >= 45

    def test_zeroed_border_bad_version(self, marked_setup):
        _, _, _, result = marked_setup
        arr = result.watermarked.pixels.copy()
        bc = border_coordinates(128, 128)
        arr[bc[:, 0], bc[:, 1]] &= 0xFE
        with pytest.raises(BadVersion):
            extract_header(GrayImage(arr), K1)


class TestRestore:
    def test_roi_bit_exact(self, marked_setup):
        image, roi, _, result = marked_setup
        restored = restore(result.watermarked, K1, K)
        assert np.array_equal(roi_crop(restored, roi), roi_crop(image, roi))

    def test_exact_equality_iff_original_lsbs_zero(self, rng):
        roi = RoiRect(16, 16, 32, 32)
        even = synth.smooth_noise(size=80, seed=3)

        restored = restore(embed(even, roi, b"epr", K1, K).watermarked, K1, K)
        assert restored == even  # all original RONI/border LSBs were zero

        arr = even.pixels.copy()
        mask = rng.random(arr.shape) < 0.5
        mask[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w] = False
        arr[mask] |= 1
        noisy = GrayImage(arr)
        restored = restore(embed(noisy, roi, b"epr", K1, K).watermarked, K1, K)
        assert restored != noisy
        expected = noisy.pixels.copy()
        labels = segment(noisy, roi).labels
        expected[labels != Region.ROI] &= 0xFE
        assert np.array_equal(restored.pixels, expected)

    def test_refuses_tampered(self, marked_setup):
        _, roi, _, result = marked_setup
        rmap = segment(result.watermarked, roi)
        spec = TamperSpec(regions=((30, 30, 8, 8),), mode="constant", value=255)
        attacked = apply_tamper(result.watermarked, rmap, spec)
        with pytest.raises(NotAuthentic):
            restore(attacked.image, K1, K)


class TestVerifyTamperPaths:
    def test_msb_tamper_flagged_exactly(self, marked_setup):
        image, roi, _, result = marked_setup
        rmap = segment(result.watermarked, roi)
        spec = TamperSpec(regions=((40, 40, 12, 12),), mode="constant", value=250)
        attacked = apply_tamper(result.watermarked, rmap, spec)
        report = verify(attacked.image, K1, K)
        assert not report.authentic
        assert set(report.tampered_blocks) == set(attacked.changed_blocks)
        assert report.block_comparisons == rmap.n_roi_blocks

    def test_constant_square_bounds_flagged_set(self):
        # zeroing a 20x20 square flags at least every block fully inside it
        # and at most the blocks it intersects
        arr = synth.shapes(size=128, seed=17).pixels.copy()
        arr[24:88, 24:88] = np.maximum(arr[24:88, 24:88], 16)  # nonzero content
        image = GrayImage(arr)
        roi = RoiRect(24, 24, 64, 64)
        result = embed(image, roi, b"", K1, K)
        rmap = segment(result.watermarked, roi)
        sq = (40, 40, 20, 20)
        attacked = apply_tamper(
            result.watermarked, rmap, TamperSpec(regions=(sq,), mode="constant", value=0)
        )
        report = verify(attacked.image, K1, K)

        inside, intersecting = set(), set()
        for i, (ay, ax) in enumerate(rmap.roi_block_anchors):
            if sq[0] <= ax and ax + 4 <= sq[0] + sq[2] and sq[1] <= ay and ay + 4 <= sq[1] + sq[3]:
                inside.add(i)
            if ax < sq[0] + sq[2] and ax + 4 > sq[0] and ay < sq[1] + sq[3] and ay + 4 > sq[1]:
                intersecting.add(i)
        flagged = set(report.tampered_blocks)
        assert inside and inside <= flagged <= intersecting

    def test_corrupt_payload_fallback(self, marked_setup):
        # destroying payload LSBs breaks RLE decode; detection still runs
        image, roi, _, result = marked_setup
        arr = result.watermarked.pixels.copy()
        n = result.header.payload_len_bits
        noise = np.random.default_rng(99).integers(0, 2, size=n, dtype=np.uint8)
        idx = np.arange(n)
        ys, xs = roi.y + idx // roi.w, roi.x + idx % roi.w
        arr[ys, xs] = (arr[ys, xs] & 0xFE) | noise
        report = verify(GrayImage(arr), K1, K)
        assert report.payload_state is PayloadState.CORRUPT
        assert report.epr is None
        assert not report.authentic
        assert report.caveat
        assert report.tampered_blocks == ()  # masked averages untouched

    def test_lsb_blind_spot(self, marked_setup):
        # flip the first token's symbol bit: the stream still decodes, the
        # extracted digest is wrong, and no block average moved
        image, roi, _, result = marked_setup
        arr = result.watermarked.pixels.copy()
        arr[roi.y, roi.x + 3] ^= 1
        report = verify(GrayImage(arr), K1, K)
        assert not report.authentic
        assert report.payload_state is PayloadState.OK
        assert report.tampered_blocks == ()
        assert report.block_comparisons > 0

    def test_lsb_flips_beyond_payload_are_healed(self, marked_setup):
        # restoration overwrites every ROI LSB with the stored plane, so
        # flips past the payload prefix are invisible to the hash check
        image, roi, _, result = marked_setup
        n = result.header.payload_len_bits
        assert n < roi.area
        arr = result.watermarked.pixels.copy()
        for pos in range(n, min(n + 40, roi.area)):
            arr[roi.y + pos // roi.w, roi.x + pos % roi.w] ^= 1
        report = verify(GrayImage(arr), K1, K)
        assert report.authentic

    def test_wrong_key_raises(self, marked_setup):
        _, _, _, result = marked_setup
        with pytest.raises((BadVersion, RoiOutOfBounds)):
            verify(result.watermarked, "not-the-key", K)


class TestRecover:
    def test_authentic_equals_restore(self, marked_setup):
        _, _, _, result = marked_setup
        recovered, report = recover(result.watermarked, K1, K)
        assert report.authentic
        assert recovered.recovered_blocks == ()
        assert recovered.image == restore(result.watermarked, K1, K)

    def test_single_block_fill(self, marked_setup):
        image, roi, _, result = marked_setup
        rmap = segment(result.watermarked, roi)
        target = 10
        ay, ax = (int(v) for v in rmap.roi_block_anchors[target])
        spec = TamperSpec(regions=((ax, ay, 4, 4),), mode="constant", value=255)
        attacked = apply_tamper(result.watermarked, rmap, spec)
        assert attacked.changed_blocks == (target,)

        recovered, report = recover(attacked.image, K1, K)
        original_avg = block_average(image, block_pixels(rmap, target, Region.ROI))
        assert recovered.recovered_blocks == ((target, original_avg),)
        block = recovered.image.pixels[ay : ay + 4, ax : ax + 4]
        assert np.all(block == original_avg)
        # fill error is bounded by the block's own spread around its average
        orig_block = image.pixels[ay : ay + 4, ax : ax + 4].astype(np.int16)
        bound = np.abs(orig_block - original_avg).max()
        assert np.abs(orig_block - block.astype(np.int16)).max() <= bound

    def test_three_disjoint_regions(self, marked_setup):
        image, roi, _, result = marked_setup
        rmap = segment(result.watermarked, roi)
        spec = TamperSpec(
            regions=((26, 26, 10, 10), (50, 30, 8, 12), (60, 70, 12, 8)),
            mode="random",
            seed=5,
        )
        attacked = apply_tamper(result.watermarked, rmap, spec)
        assert len(attacked.changed_blocks) >= 3
        recovered, report = recover(attacked.image, K1, K)
        assert set(report.tampered_blocks) == set(attacked.changed_blocks)
        assert {i for i, _ in recovered.recovered_blocks} == set(attacked.changed_blocks)
        labels = rmap.labels
        assert np.all(recovered.image.pixels[labels != Region.ROI] & 1 == 0)

    def test_deterministic(self, marked_setup):
        _, _, _, result = marked_setup
        rmap = segment(result.watermarked, RoiRect(24, 24, 64, 64))
        spec = TamperSpec(regions=((30, 40, 16, 16),), mode="random", seed=8)
        attacked = apply_tamper(result.watermarked, rmap, spec)
        r1, report1 = recover(attacked.image, K1, K)
        r2, report2 = recover(attacked.image, K1, K)
        assert r1.image == r2.image
        assert r1.recovered_blocks == r2.recovered_blocks
        assert report1.tampered_blocks == report2.tampered_blocks
