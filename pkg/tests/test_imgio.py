import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stereoeval.imgio import (
    DatasetManifest,
    FrameRecord,
    FrameTriple,
    GrayImage,
    ManifestError,
    PnmHeaderError,
    PnmMagicError,
    PnmMaxvalError,
    PnmTruncatedError,
    encode_pgm,
    load_image,
    load_manifest,
    load_pgm,
    load_ppm_as_gray,
    read_disparity,
    save_pgm,
    write_disparity,
)
from stereoeval.matchers import INVALID, DisparityMap


def _write(path, blob):
    path.write_bytes(blob)
    return path


def test_load_pgm_2x2(tmp_path):
    p = _write(tmp_path / "a.pgm", b"P5\n2 2\n255\n" + bytes([0, 255, 10, 20]))
    img = load_pgm(p)
    assert (img.width, img.height) == (2, 2)
    assert img.data.ravel().tolist() == [0, 255, 10, 20]


def test_load_pgm_1x1(tmp_path):
    img = load_pgm(_write(tmp_path / "a.pgm", b"P5\n1 1\n255\n" + bytes([7])))
    assert img.data.tolist() == [[7]]


def test_load_pgm_with_comments(tmp_path):
    blob = b"P5 # made by hand\n# another\n3 1\n255\n" + bytes([1, 2, 3])
    assert load_pgm(_write(tmp_path / "c.pgm", blob)).data.tolist() == [[1, 2, 3]]


def test_load_pgm_rejects_p6(tmp_path):
    p = _write(tmp_path / "a.ppm", b"P6\n1 1\n255\n" + bytes([1, 2, 3]))
    with pytest.raises(PnmMagicError, match="wrong format") as err:
        load_pgm(p)
    assert err.value.offset == 0


def test_load_pgm_maxval(tmp_path):
    p = _write(tmp_path / "a.pgm", b"P5\n1 1\n65535\n" + bytes([0, 7]))
    with pytest.raises(PnmMaxvalError) as err:
        load_pgm(p)
    assert err.value.offset == 7


def test_load_pgm_truncated(tmp_path):
    p = _write(tmp_path / "a.pgm", b"P5\n2 2\n255\n" + bytes([1, 2, 3]))
    with pytest.raises(PnmTruncatedError) as err:
        load_pgm(p)
    assert err.value.offset == 14


@pytest.mark.parametrize("blob, offset", [
    (b"P5\n2 x\n255\n", 5),
    (b"P5\n2 2\n", 7),
    (b"P5\n0 2\n255\n\0\0", 3),
    (b"P", 0),
])
def test_load_pgm_bad_header(tmp_path, blob, offset):
    with pytest.raises(PnmHeaderError) as err:
        load_pgm(_write(tmp_path / "a.pgm", blob))
    assert err.value.offset == offset


@pytest.mark.parametrize("rgb, expected", [
    ((255, 255, 255), 255),
    ((0, 0, 0), 0),
    ((255, 0, 0), 76),
    ((0, 255, 0), 150),
    ((0, 0, 255), 29),
])
def test_ppm_luma(tmp_path, rgb, expected):
    p = _write(tmp_path / "a.ppm", b"P6\n1 1\n255\n" + bytes(rgb))
    assert load_ppm_as_gray(p).data.tolist() == [[expected]]
    assert load_image(p).data.tolist() == [[expected]]


def test_ppm_errors(tmp_path):
    with pytest.raises(PnmMagicError):
        load_ppm_as_gray(_write(tmp_path / "a.pgm", b"P5\n1 1\n255\n\0"))
    with pytest.raises(PnmTruncatedError):
        load_ppm_as_gray(_write(tmp_path / "b.ppm", b"P6\n1 1\n255\n\0\0"))


def test_gray_image_validation():
    with pytest.raises(ValueError):
        GrayImage(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        GrayImage(np.array([[256]]))
    img = GrayImage.from_flat(3, 2, range(6))
    assert img.data.shape == (2, 3)
    with pytest.raises(ValueError):
        img.data[0, 0] = 1


@settings(max_examples=50, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_pgm_roundtrip(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("rt") / "img.pgm"
    img = GrayImage(data)
    save_pgm(img, path)
    back = load_pgm(path)
    assert back == img
    assert back.data.min() >= 0 and back.data.max() <= 255


def test_write_disparity_values(tmp_path):
    p = tmp_path / "d.pgm"
    write_disparity(DisparityMap.constant(5, 3, 4), p)
    blob = p.read_bytes()
    payload = np.frombuffer(blob[-3 * 4 * 2:], dtype=">u2")
    assert payload.tolist() == [1280] * 12
    assert b"65535" in blob


def test_write_disparity_invalid(tmp_path):
    p = tmp_path / "d.pgm"
    dmap = DisparityMap(np.full((2, 2), INVALID), 0, 15)
    write_disparity(dmap, p)
    payload = np.frombuffer(p.read_bytes()[-8:], dtype=">u2")
    assert payload.tolist() == [0, 0, 0, 0]
    assert read_disparity(p) == dmap


def test_disparity_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.integers(-1, 16, size=(7, 9))
    data[0, 0] = 0
    dmap = DisparityMap(data, 0, 15)
    p = tmp_path / "d.pgm"
    write_disparity(dmap, p)
    back = read_disparity(p)
    assert back == dmap
    assert back.data[0, 0] == 0


def _mk_images(tmp_path, n):
    names = []
    for k in range(n):
        for role in ("r", "m", "t"):
            name = f"{role}{k}.pgm"
            (tmp_path / name).write_bytes(encode_pgm(np.full((2, 2), k, np.uint8)))
            names.append(name)
    return names


def test_load_manifest(tmp_path):
    _mk_images(tmp_path, 3)
    text = "# demo\ncase fluorescent\nbaseline 0.5\n\n" + "".join(
        f"frame r{k}.pgm m{k}.pgm t{k}.pgm  # frame {k}\n" for k in range(3)
    )
    (tmp_path / "m.txt").write_text(text)
    man = load_manifest(tmp_path / "m.txt")
    assert man.case_id == "fluorescent"
    assert man.T == 3
    assert man.baseline_fraction == 0.5
    assert man.frames[1].match == (tmp_path / "m1.pgm").resolve()
    triple = man.load_frame(2)
    assert triple.frame_index == 2 and triple.reference.data[0, 0] == 2


def test_manifest_hundred_frames(tmp_path):
    (tmp_path / "r.pgm").write_bytes(encode_pgm(np.zeros((1, 1), np.uint8)))
    (tmp_path / "m.pgm").write_bytes(encode_pgm(np.zeros((1, 1), np.uint8)))
    (tmp_path / "t.pgm").write_bytes(encode_pgm(np.zeros((1, 1), np.uint8)))
    lines = ["case case1", "baseline 0.5"] + ["frame r.pgm m.pgm t.pgm"] * 100
    (tmp_path / "m.txt").write_text("\n".join(lines))
    assert load_manifest(tmp_path / "m.txt").T == 100


@pytest.mark.parametrize("text, msg", [
    ("case a\nbaseline 1.5\nframe r0.pgm m0.pgm t0.pgm\n", "out of range"),
    ("baseline 0.5\nframe r0.pgm m0.pgm t0.pgm\n", "missing 'case'"),
    ("case a\nframe r0.pgm m0.pgm t0.pgm\n", "missing 'baseline'"),
    ("case a\nbaseline 0.5\n", "no frames"),
    ("case a\nbaseline 0.5\nframe r0.pgm m0.pgm nope.pgm\n", "not found"),
    ("case a\nbaseline 0.5\nframe r0.pgm r0.pgm t0.pgm\n", "distinct"),
    ("case a\ncase b\nbaseline 0.5\nframe r0.pgm m0.pgm t0.pgm\n", "duplicate"),
    ("case a\nbaseline 0.5\nframe r0.pgm m0.pgm\n", "needs"),
    ("case a\nbaseline 0.5\nshot r0.pgm m0.pgm t0.pgm\n", "unknown directive"),
])
def test_manifest_errors(tmp_path, text, msg):
    _mk_images(tmp_path, 1)
    (tmp_path / "m.txt").write_text(text)
    with pytest.raises(ManifestError, match=msg):
        load_manifest(tmp_path / "m.txt")


def test_frame_triple_invariants():
    a = GrayImage(np.zeros((2, 2)))
    b = GrayImage(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        FrameTriple(a, b, a)
    with pytest.raises(ValueError):
        FrameTriple(a, a, a, baseline_fraction=0.0)
    FrameTriple(a, a, a, baseline_fraction=1.0)


def test_manifest_type_rejects_empty():
    with pytest.raises(ManifestError):
        DatasetManifest("x", (), 0.5)
    with pytest.raises(ValueError):
        DatasetManifest("x", (FrameRecord("a", "b", "c"),), 0.0)
