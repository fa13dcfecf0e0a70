import numpy as np
import pytest
from conftest import make_scene
from PIL import Image as PILImage

from archstyle.imagecore import Image, Luma, Mask, rgb_to_luma, save_png
from archstyle.metrics import (
    EvalParams,
    ProbTable,
    canny,
    edge_ssim,
    eval_corpus,
    inception_score,
    iou,
    ssim,
    top1_accuracy,
)


def rand_image(rng, h=32, w=32, lo=0.0, hi=1.0):
    return Image(rng.uniform(lo, hi, (h, w, 3)))


class TestSsim:
    def test_self_similarity_is_exactly_one(self):
        rng = np.random.default_rng(0)
        x = rand_image(rng)
        assert ssim(x, x) == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a, b = rand_image(rng), rand_image(rng)
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-12

    def test_noise_monotonicity(self):
        rng = np.random.default_rng(2)
        x = rand_image(rng, 48, 48, 0.3, 0.7)
        noisy = lambda s: Image(np.clip(x.data + rng.normal(0, s, x.data.shape), 0, 1))
        assert ssim(x, noisy(0.1)) < ssim(x, noisy(0.05))

    def test_matches_skimage_reference(self):
        from skimage.metrics import structural_similarity

        rng = np.random.default_rng(3)
        a, b = rand_image(rng, 40, 56), rand_image(rng, 40, 56)
        ya, yb = rgb_to_luma(a).data, rgb_to_luma(b).data
        ref = structural_similarity(
            ya,
            yb,
            data_range=1.0,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
        )
        assert ssim(a, b) == pytest.approx(ref, abs=1e-7)

    def test_too_small_rejected(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            ssim(rand_image(rng, 8, 8), rand_image(rng, 8, 8))


class TestCanny:
    def test_constant_image_has_no_edges(self):
        e = canny(Luma(np.full((24, 24), 0.5)))
        assert not e.data.any()

    def test_vertical_step_gives_single_pixel_line(self):
        data = np.full((16, 16), 0.2)
        data[:, 8:] = 0.8
        e = canny(Luma(data))
        cols = np.unique(np.nonzero(e.data)[1])
        assert len(cols) == 1, f"expected one edge column, got {cols}"
        assert e.data[1:-1, cols[0]].all()
        assert e.data.sum() <= 16

    def test_brightness_shift_invariance(self):
        img, _ = make_scene(32, 32, seed=3)
        y = rgb_to_luma(Image(np.clip(img.data * 0.7, 0, 0.7))).data
        a = canny(Luma(y))
        b = canny(Luma(y + 0.1))
        assert np.array_equal(a.data, b.data)

    def test_threshold_validation(self):
        l = Luma(np.zeros((8, 8)))
        with pytest.raises(ValueError):
            canny(l, low=0.3, high=0.2)
        with pytest.raises(ValueError):
            canny(l, low=0.1, high=0.2, sigma=-1.0)


class TestEdgeSsim:
    def test_self_is_one(self):
        img, _ = make_scene(32, 32, seed=1)
        assert edge_ssim(img, img) == 1.0

    def test_brightness_offset_is_one(self):
        img, _ = make_scene(32, 32, seed=2)
        base = Image(np.clip(img.data * 0.5, 0.0, 0.75))
        shifted = Image(base.data + 0.2)
        assert edge_ssim(base, shifted) == 1.0

    def test_blur_reduces_similarity(self):
        from conftest import degrade

        img, _ = make_scene(48, 48, seed=4)
        assert edge_ssim(img, degrade(img)) < 1.0


def brute_force_iou(a, b):
    inter = union = 0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            pa, pb = a[i, j] > 0.5, b[i, j] > 0.5
            inter += pa and pb
            union += pa or pb
    return inter / union if union else 1.0


class TestIou:
    def test_identical(self):
        m = Mask(np.eye(4))
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4))
        a[0, 0] = 1
        b = np.zeros((4, 4))
        b[3, 3] = 1
        assert iou(Mask(a), Mask(b)) == 0.0

    def test_counting_case(self):
        a = np.zeros((4, 4))
        a[0, :4] = 1  # 4 pixels
        b = np.zeros((4, 4))
        b[0, 2:] = 1
        b[1, :2] = 1  # 4 pixels, 2 shared
        assert iou(Mask(a), Mask(b)) == pytest.approx(2 / 6)

    def test_both_empty_is_one(self):
        assert iou(Mask(np.zeros((3, 3))), Mask(np.zeros((3, 3)))) == 1.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = (rng.uniform(0, 1, (16, 16)) > rng.uniform(0.2, 0.8)).astype(float)
            b = (rng.uniform(0, 1, (16, 16)) > rng.uniform(0.2, 0.8)).astype(float)
            assert iou(Mask(a), Mask(b)) == brute_force_iou(a, b)

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            iou(Mask(np.full((2, 2), 0.5)), Mask(np.zeros((2, 2))))

    def test_dims_checked(self):
        with pytest.raises(ValueError):
            iou(Mask(np.zeros((2, 2))), Mask(np.zeros((3, 3))))


class TestProbTable:
    def test_rows_must_normalize(self):
        with pytest.raises(ValueError, match="sum"):
            ProbTable(["a"], np.array([[0.5, 0.4]]))

    def test_csv_roundtrip_with_labels(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("id,label,p0,p1,p2\nx,0,0.7,0.2,0.1\ny,2,0.1,0.2,0.7\n")
        t = ProbTable.from_csv(path)
        assert t.ids == ["x", "y"] and t.labels == [0, 2] and t.n_classes == 3

    def test_csv_without_labels(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("id,p0,p1\nx,0.5,0.5\n")
        t = ProbTable.from_csv(path)
        assert t.labels is None

    def test_bad_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("name,p0,p1\nx,0.5,0.5\n")
        with pytest.raises(ValueError, match="id"):
            ProbTable.from_csv(path)


class TestTop1:
    def test_all_correct(self):
        t = ProbTable(["a", "b"], np.array([[0.9, 0.1], [0.2, 0.8]]), labels=[0, 1])
        assert top1_accuracy(t) == 1.0

    def test_all_wrong(self):
        t = ProbTable(["a", "b"], np.array([[0.9, 0.1], [0.2, 0.8]]), labels=[1, 0])
        assert top1_accuracy(t) == 0.0

    def test_two_of_three(self):
        t = ProbTable(
            ["a", "b", "c"],
            np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]]),
            labels=[0, 1, 1],
        )
        assert top1_accuracy(t) == pytest.approx(2 / 3, abs=1e-4)

    def test_tie_breaks_to_lowest_index(self):
        t = ProbTable(["a"], np.array([[0.5, 0.5]]), labels=[0])
        assert top1_accuracy(t) == 1.0

    def test_labels_required(self):
        t = ProbTable(["a"], np.array([[0.5, 0.5]]))
        with pytest.raises(ValueError):
            top1_accuracy(t)


class TestInceptionScore:
    def test_uniform_rows_give_one(self):
        t = ProbTable(list("abcd"), np.full((4, 5), 0.2))
        assert inception_score(t) == pytest.approx(1.0, abs=1e-12)

    def test_one_hot_rows_give_class_count(self):
        c = 6
        t = ProbTable([str(i) for i in range(c)], np.eye(c))
        assert inception_score(t) == pytest.approx(c, abs=1e-6)

    def test_single_row_gives_one(self):
        t = ProbTable(["a"], np.array([[0.3, 0.3, 0.4]]))
        assert inception_score(t) == pytest.approx(1.0, abs=1e-12)

    def test_bounded_by_class_count(self):
        rng = np.random.default_rng(6)
        p = rng.dirichlet(np.ones(4), size=30)
        t = ProbTable([str(i) for i in range(30)], p)
        assert 1.0 <= inception_score(t) <= 4.0

    def test_splits(self):
        t = ProbTable(list("abcd"), np.full((4, 3), 1 / 3))
        assert inception_score(t, splits=2) == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            inception_score(t, splits=9)


class TestEvalCorpus:
    @pytest.fixture()
    def corpus(self, tmp_path):
        params = EvalParams(resize_to=None)
        results = tmp_path / "results"
        refs = tmp_path / "refs"
        masks = tmp_path / "masks"
        for d in (results, refs, masks / "results", masks / "refs"):
            d.mkdir(parents=True)
        rng = np.random.default_rng(7)
        for i in range(3):
            img, mask = make_scene(32, 32, seed=i)
            save_png(img, refs / f"im{i}.png")
            noisy = Image(np.clip(img.data + rng.normal(0, 0.05, img.data.shape), 0, 1))
            save_png(noisy, results / f"im{i}.png")
            arr = (mask.alpha * 255).astype(np.uint8)
            PILImage.fromarray(arr, mode="L").save(masks / "results" / f"im{i}.png")
            PILImage.fromarray(arr, mode="L").save(masks / "refs" / f"im{i}.png")
        probs = tmp_path / "probs.csv"
        probs.write_text(
            "id,label,p0,p1\nim0,0,0.8,0.2\nim1,1,0.3,0.7\nim2,1,0.9,0.1\n"
        )
        return tmp_path, params

    def test_rows_match_per_op_oracle(self, corpus):
        from archstyle.imagecore import load_png

        root, params = corpus
        report = eval_corpus(
            root / "results", root / "refs", root / "masks", root / "probs.csv", params
        )
        assert [r.id for r in report.rows] == ["im0", "im1", "im2"]
        for row in report.rows:
            out = load_png(root / "results" / f"{row.id}.png")
            ref = load_png(root / "refs" / f"{row.id}.png")
            assert row.ssim == pytest.approx(ssim(out, ref), abs=1e-12)
            assert row.essim == pytest.approx(edge_ssim(out, ref), abs=1e-12)
            assert row.iou == 1.0
        assert report.accuracy == pytest.approx(2 / 3)
        assert report.inception is not None and report.inception >= 1.0

    def test_identical_dirs_score_one(self, corpus):
        root, params = corpus
        report = eval_corpus(root / "refs", root / "refs", params=params)
        assert report.mean_ssim == 1.0
        assert report.mean_essim == 1.0

    def test_empty_intersection_errors(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        save_png(Image(np.zeros((16, 16, 3))), a / "x.png")
        save_png(Image(np.zeros((16, 16, 3))), b / "y.png")
        with pytest.raises(ValueError, match="zero rows"):
            eval_corpus(a, b)

    def test_unmatched_stems_skipped_and_listed(self, corpus):
        root, params = corpus
        extra = root / "results" / "orphan.png"
        save_png(Image(np.zeros((16, 16, 3))), extra)
        report = eval_corpus(root / "results", root / "refs", params=params)
        assert report.skipped == ["orphan"]
        assert len(report.rows) == 3

    def test_csv_report_shape(self, corpus):
        root, params = corpus
        report = eval_corpus(root / "results", root / "refs", params=params)
        text = report.to_csv()
        lines = text.strip().splitlines()
        assert lines[0].startswith("# canny_sigma=")
        assert lines[1] == "id,ssim,essim,iou"
        assert lines[-1].startswith("mean,")

    def test_default_resize_to_256(self, corpus):
        root, _ = corpus
        report = eval_corpus(root / "refs", root / "refs")
        assert report.mean_ssim == 1.0
