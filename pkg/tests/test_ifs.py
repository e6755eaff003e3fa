import numpy as np
import pytest

from opkant.errors import DimensionError
from opkant.ifs import (BUNDLED_CONFIGS, AffineContraction, IteratedFunctionSystem, all_words,
                        apply_word, attractor_approximation, attractor_error_bound,
                        bundled_config_path, coding_map, default_seed, format_ifs, load_ifs,
                        parse_ifs, resolve_ifs, word_points)
from opkant.metric import hausdorff_distance


def test_cantor_config_values(cantor):
    assert cantor.N == 2 and cantor.dim == 1
    assert cantor.c_max == pytest.approx(1 / 3)
    np.testing.assert_allclose(cantor.fixed_points().ravel(), [0.0, 1.0])


def test_sierpinski_config(sierpinski):
    assert sierpinski.N == 3 and sierpinski.dim == 2
    assert sierpinski.c_max == pytest.approx(0.5)


@pytest.mark.parametrize("name", BUNDLED_CONFIGS)
def test_bundled_configs_load(name):
    ifs = resolve_ifs(name)
    assert ifs.c_max < 1
    assert bundled_config_path(name).is_file()


def test_parse_accepts_commas_comments_and_fractions():
    ifs = parse_ifs("# header\n1/3, 0  # first\n\n0.5 , 1/2\n")
    assert ifs.maps[0].linear_part[0, 0] == 1 / 3
    assert ifs.maps[1].offset[0] == 0.5


@pytest.mark.parametrize("text, message", [
    ("", "no maps"),
    ("1 2 3\n0.5 0\n", "d\\*d \\+ d"),
    ("0.5 x\n0.5 1\n", "line 1"),
    ("1/0 0\n0.5 1\n", "line 1"),
    ("2 0\n0.5 1\n", "contraction"),
    ("0.5 0\n", "at least two"),
    ("0.5 0\n0.5 0 0 0.5 0 0\n", "dimension"),
])
def test_parse_errors(text, message):
    with pytest.raises(ValueError, match=message):
        parse_ifs(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_ifs(tmp_path / "nope.ifs")


def test_format_roundtrip(sierpinski, tmp_path):
    path = tmp_path / "s.ifs"
    path.write_text(format_ifs(sierpinski))
    back = load_ifs(path)
    for a, b in zip(back.maps, sierpinski.maps):
        np.testing.assert_array_equal(a.linear_part, b.linear_part)
        np.testing.assert_array_equal(a.offset, b.offset)


def test_rotation_contraction_uses_spectral_norm():
    c, s = np.cos(0.3), np.sin(0.3)
    m = AffineContraction(0.9 * np.array([[c, -s], [s, c]]), [0, 0])
    assert m.lipschitz_constant == pytest.approx(0.9)


def test_contraction_boundary_rejected():
    with pytest.raises(ValueError):
        AffineContraction(np.eye(2), [0, 0])


def test_apply_word_composes_outermost_first(cantor):
    # s0(s1(0)) = (2/3)/3
    assert apply_word(cantor, (0, 1), [0.0])[0] == pytest.approx(2 / 9)
    assert apply_word(cantor, (1, 0), [0.0])[0] == pytest.approx(2 / 3)


def test_apply_word_errors(cantor):
    with pytest.raises(ValueError):
        apply_word(cantor, (2,), [0.0])
    with pytest.raises(DimensionError):
        apply_word(cantor, (0,), [0.0, 1.0])


def test_all_words_lexicographic():
    np.testing.assert_array_equal(all_words(2, 2), [[0, 0], [0, 1], [1, 0], [1, 1]])
    assert all_words(3, 4).shape == (81, 4)


def test_word_points_match_apply_word(sierpinski):
    seed = default_seed(sierpinski)
    pts = word_points(sierpinski, seed, 3)
    for k, w in enumerate(all_words(3, 3)):
        np.testing.assert_allclose(pts[k], apply_word(sierpinski, w, seed), atol=1e-15)


def test_cantor_depth_three_points(cantor):
    cloud = attractor_approximation(cantor, depth=3)
    expected = np.array([0, 2, 6, 8, 18, 20, 24, 26]) / 27
    np.testing.assert_allclose(cloud.points.ravel(), expected, atol=1e-15)


def test_attractor_error_bound_holds(cantor, sierpinski):
    for ifs in (cantor, sierpinski):
        fine = attractor_approximation(ifs, depth=9)
        for K in (2, 4):
            coarse = attractor_approximation(ifs, depth=K)
            assert hausdorff_distance(coarse, fine) <= attractor_error_bound(ifs, K)


def test_diameter_bound_covers_bundled_attractors():
    for name in BUNDLED_CONFIGS:
        ifs = resolve_ifs(name)
        assert attractor_approximation(ifs, depth=6).diameter() <= ifs.diameter_bound() + 1e-12


def test_attractor_is_invariant(sierpinski):
    A = attractor_approximation(sierpinski, depth=7).points
    images = np.concatenate([sierpinski.image(A, i) for i in range(3)])
    assert hausdorff_distance(A, images) <= attractor_error_bound(sierpinski, 7) * 2


def test_coding_map_converges(cantor):
    w = (1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0)
    # 0.202020..._3 = (2/3) / (1 - 1/9) = 3/4
    assert coding_map(cantor, w)[0] == pytest.approx(0.75, abs=3.0 ** -12)
    with pytest.raises(ValueError):
        coding_map(cantor, ())


def test_ifs_rejects_single_map():
    with pytest.raises(ValueError):
        IteratedFunctionSystem([AffineContraction([[0.5]], [0.0])])
