import math

import numpy as np
import pytest

from textaudit.embedbias import (
    EmbeddingTable,
    cosine_similarity,
    embedding_bias,
    embedding_bias_csv,
    load_embeddings,
    subgroup_similarity_profile,
)
from textaudit.errors import EmbeddingError
from textaudit.lexicon import NeutralWordList, _lexicon_from_obj


def table_of(**vectors):
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
    dim = len(next(iter(arrays.values())))
    return EmbeddingTable(dimension=dim, vectors=arrays)


def test_load_embeddings_basic(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 0\nb 0 1\n")
    table = load_embeddings(path)
    assert table.dimension == 2
    assert len(table) == 2
    assert list(table.get("a")) == [1.0, 0.0]


def test_load_embeddings_dimension_error_reports_line(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 0 0\nb 0 1\n")
    with pytest.raises(EmbeddingError, match="line 2"):
        load_embeddings(path)


def test_load_embeddings_duplicate_keeps_first(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 0\na 0 1\n")
    with pytest.warns(UserWarning, match="1 duplicate"):
        table = load_embeddings(path)
    assert list(table.get("a")) == [1.0, 0.0]


def test_load_embeddings_empty_file(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("\n")
    with pytest.raises(EmbeddingError, match="empty"):
        load_embeddings(path)


def test_load_embeddings_bad_number(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 zebra\n")
    with pytest.raises(EmbeddingError, match="line 1"):
        load_embeddings(path)


def test_cosine_identity():
    assert cosine_similarity((1, 2, 3), (1, 2, 3)) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal():
    assert cosine_similarity((1, 0), (0, 1)) == pytest.approx(0.0, abs=1e-12)


def test_cosine_closed_form():
    assert cosine_similarity((1, 1), (1, 0)) == pytest.approx(1 / math.sqrt(2), abs=1e-9)


def test_cosine_zero_norm_rejected():
    with pytest.raises(EmbeddingError, match="zero-norm"):
        cosine_similarity((0, 0), (1, 0))


def test_profile_identical_vector():
    table = table_of(n=[0.3, 0.4], t=[0.3, 0.4])
    profile = subgroup_similarity_profile(NeutralWordList(words=("n",)), ["t"], table, "s")
    assert profile.x == pytest.approx((1.0,), abs=1e-12)


def test_profile_hand_average():
    # cos(n, t1) = 1, cos(n, t2) = 0 -> mean 0.5
    table = table_of(n=[1, 0], t1=[2, 0], t2=[0, 5])
    profile = subgroup_similarity_profile(NeutralWordList(words=("n",)), ["t1", "t2"], table, "s")
    assert profile.x[0] == pytest.approx(0.5, abs=1e-12)


def test_profile_all_oov_error():
    table = table_of(n=[1, 0])
    with pytest.raises(EmbeddingError, match="no in-vocabulary subgroup terms"):
        subgroup_similarity_profile(NeutralWordList(words=("n",)), ["ghost", "void"], table, "s")


def test_profile_oov_neutral_dropped():
    table = table_of(n1=[1, 0], t=[1, 0])
    profile = subgroup_similarity_profile(
        NeutralWordList(words=("n1", "missing")), ["t"], table, "s"
    )
    assert profile.covered_neutral_terms == ("n1",)


def _unit(*components):
    v = np.asarray(components, dtype=np.float64)
    return v / np.linalg.norm(v)


def test_embedding_bias_hand_case():
    # Profiles x_a = (0.5, 0.1), x_b = (0.3, 0.5): diffs (0.2, -0.4)
    table = table_of(
        n1=[1, 0, 0],
        n2=[0, 1, 0],
        ta=list(_unit(0.5, 0.1, math.sqrt(1 - 0.5**2 - 0.1**2))),
        tb=list(_unit(0.3, 0.5, math.sqrt(1 - 0.3**2 - 0.5**2))),
    )
    lexicon = _lexicon_from_obj({"attr": {"a": ["ta"], "b": ["tb"]}})
    result = embedding_bias(NeutralWordList(words=("n1", "n2")), lexicon, "attr", table)
    assert result.amae == pytest.approx(0.3, abs=1e-9)
    assert result.armse == pytest.approx(math.sqrt(0.1), abs=1e-9)
    mae, rmse = result.pairwise[("a", "b")]
    assert mae == pytest.approx(0.3, abs=1e-9)
    assert rmse == pytest.approx(math.sqrt(0.1), abs=1e-9)


def test_embedding_bias_identical_term_sets_zero():
    table = table_of(n1=[1, 0], n2=[0.4, 0.6], t1=[0.2, 0.9], t2=[0.8, 0.1])
    lexicon = _lexicon_from_obj({"attr": {"a": ["t1", "t2"], "b": ["t1", "t2"]}})
    result = embedding_bias(NeutralWordList(words=("n1", "n2")), lexicon, "attr", table)
    assert result.amae == 0.0
    assert result.armse == 0.0


def test_embedding_bias_two_subgroups_amae_equals_mae():
    rng = np.random.default_rng(5)
    names = [f"t{i}" for i in range(6)] + ["n1", "n2", "n3"]
    table = table_of(**{name: rng.normal(size=4) for name in names})
    lexicon = _lexicon_from_obj({"attr": {"a": ["t0", "t1", "t2"], "b": ["t3", "t4", "t5"]}})
    result = embedding_bias(NeutralWordList(words=("n1", "n2", "n3")), lexicon, "attr", table)
    mae, rmse = result.pairwise[("a", "b")]
    assert result.amae == mae
    assert result.armse == rmse
    assert rmse >= mae


def test_embedding_bias_multi_token_and_oov_skipped():
    table = table_of(n=[1, 0], t1=[0.5, 0.5], t2=[0.1, 0.9])
    lexicon = _lexicon_from_obj(
        {"attr": {"a": ["t1", "old man"], "b": ["t2", "ghost"]}}
    )
    result = embedding_bias(NeutralWordList(words=("n",)), lexicon, "attr", table)
    assert set(result.skipped_terms) == {"old man", "ghost"}


def test_embedding_bias_fewer_than_two_subgroups():
    table = table_of(n=[1, 0], t1=[0.5, 0.5])
    lexicon = _lexicon_from_obj({"attr": {"a": ["t1"], "b": ["ghost"]}})
    with pytest.raises(EmbeddingError, match="at least 2 subgroups"):
        embedding_bias(NeutralWordList(words=("n",)), lexicon, "attr", table)


def test_embedding_bias_neutral_overlap_excluded():
    table = table_of(n=[1, 0], t1=[0.5, 0.5], t2=[0.1, 0.9])
    lexicon = _lexicon_from_obj({"attr": {"a": ["t1"], "b": ["t2"]}})
    with pytest.warns(UserWarning, match="overlap"):
        result = embedding_bias(NeutralWordList(words=("n", "t1")), lexicon, "attr", table)
    assert result.amae >= 0.0


def test_embedding_bias_scale_invariance():
    rng = np.random.default_rng(11)
    names = [f"t{i}" for i in range(4)] + ["n1", "n2"]
    base = {name: rng.normal(size=3) for name in names}
    lexicon = _lexicon_from_obj({"attr": {"a": ["t0", "t1"], "b": ["t2", "t3"]}})
    neutrals = NeutralWordList(words=("n1", "n2"))
    r1 = embedding_bias(neutrals, lexicon, "attr", table_of(**base))
    scaled = {k: 17.5 * v for k, v in base.items()}
    r2 = embedding_bias(neutrals, lexicon, "attr", table_of(**scaled))
    assert r1.amae == pytest.approx(r2.amae, abs=1e-9)
    assert r1.armse == pytest.approx(r2.armse, abs=1e-9)


def test_embedding_bias_subgroup_permutation_invariant():
    rng = np.random.default_rng(23)
    names = [f"t{i}" for i in range(6)] + ["n1", "n2"]
    vectors = {name: rng.normal(size=3) for name in names}
    neutrals = NeutralWordList(words=("n1", "n2"))
    lex_fwd = _lexicon_from_obj(
        {"attr": {"a": ["t0", "t1"], "b": ["t2", "t3"], "c": ["t4", "t5"]}}
    )
    lex_rev = _lexicon_from_obj(
        {"attr": {"c": ["t4", "t5"], "b": ["t2", "t3"], "a": ["t0", "t1"]}}
    )
    r1 = embedding_bias(neutrals, lex_fwd, "attr", table_of(**vectors))
    r2 = embedding_bias(neutrals, lex_rev, "attr", table_of(**vectors))
    assert r1.amae == pytest.approx(r2.amae, abs=1e-12)
    assert r1.armse == pytest.approx(r2.armse, abs=1e-12)
    assert len(r1.pairwise) == 3


def test_csv_emission():
    table = table_of(n=[1, 0], t1=[0.5, 0.5], t2=[0.1, 0.9])
    lexicon = _lexicon_from_obj({"attr": {"a": ["t1"], "b": ["t2"]}})
    result = embedding_bias(NeutralWordList(words=("n",)), lexicon, "attr", table)
    text = embedding_bias_csv([result])
    assert text.splitlines()[0] == "attribute,subgroup_a,subgroup_b,mae,rmse"
    assert "attr,ALL,ALL," in text
