"""Author-embedding table: init, lookup, pretraining, file round trip."""

import math

import numpy as np
import pytest

from rumornet.errors import DataError, FormatError
from rumornet.rng import SeededRng
from rumornet.tensor import Tensor
from rumornet.users import (UserHistory, UserTable, init_user_table, load,
                            lookup, pretrain, save)


def small_table(ids=("a", "b"), dim=4, seed=11):
    return init_user_table(list(ids), dim, SeededRng(seed))


class TestInit:
    def test_null_row_is_zero(self):
        t = small_table()
        assert np.all(t.matrix.data[0] == 0.0)

    def test_rows_within_init_range(self):
        t = small_table(ids=tuple("u%d" % i for i in range(20)), dim=6)
        body = t.matrix.data[1:]
        assert np.all(np.abs(body) <= 0.08)
        assert np.any(body != 0.0)

    def test_row_assignment_follows_input_order(self):
        t = small_table(ids=("x", "y", "z"))
        assert t.row_of == {"x": 1, "y": 2, "z": 3}
        assert t.matrix.shape == (4, 4)

    def test_deterministic(self):
        a, b = small_table(seed=5), small_table(seed=5)
        np.testing.assert_array_equal(a.matrix.data, b.matrix.data)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            init_user_table(["a", "a"], 4, SeededRng(0))

    def test_bad_dim_rejected(self):
        with pytest.raises(DataError):
            init_user_table(["a"], 0, SeededRng(0))

    def test_empty_table_is_just_null_row(self):
        t = init_user_table([], 5, SeededRng(0))
        assert t.matrix.shape == (1, 5)


class TestLookup:
    def test_known_user(self):
        t = small_table()
        np.testing.assert_array_equal(lookup(t, "a"), t.matrix.data[1])

    def test_unknown_and_null_map_to_zero_row(self):
        t = small_table()
        assert t.row_index("stranger") == 0
        assert t.row_index(None) == 0
        assert np.all(lookup(t, "stranger") == 0.0)
        assert np.all(lookup(t, None) == 0.0)


class TestPretrain:
    def zero_word_vecs(self, n_words=6, dim=4):
        return Tensor(np.zeros((n_words, dim)))

    def test_initial_loss_is_log2_per_score(self):
        # single (user, word) pair: scores are exactly 0 when word vectors
        # are zero, so loss = -(1 + negs) * log sigmoid(0) = 3 ln 2.  A
        # longer history would not do: the second pair already sees the
        # rows moved by the first pair's update.
        t = small_table(ids=("a",))
        losses = []
        pretrain(t, [UserHistory("a", [[2]])], self.zero_word_vecs(),
                 epochs=1, neg_samples=2, rng=SeededRng(0),
                 epoch_losses=losses)
        assert losses[0] == pytest.approx(3 * math.log(2), abs=1e-12)

    def test_zero_epochs_changes_nothing(self):
        t = small_table()
        before = t.matrix.data.copy()
        wv = Tensor(SeededRng(1).uniform(-0.1, 0.1, size=(6, 4)))
        losses = []
        pretrain(t, [UserHistory("a", [[2]])], wv, epochs=0, neg_samples=2,
                 rng=SeededRng(0), epoch_losses=losses)
        np.testing.assert_array_equal(t.matrix.data, before)
        assert losses == []

    def test_empty_history_warns_and_skips(self):
        t = small_table()
        before = t.matrix.data.copy()
        with pytest.warns(UserWarning, match="empty history"):
            pretrain(t, [UserHistory("a", [])], self.zero_word_vecs(),
                     epochs=3, neg_samples=2, rng=SeededRng(0))
        np.testing.assert_array_equal(t.matrix.data, before)

    def test_unknown_user_rejected(self):
        t = small_table()
        with pytest.raises(DataError, match="not in the table"):
            pretrain(t, [UserHistory("ghost", [[2]])], self.zero_word_vecs(),
                     epochs=1, neg_samples=1, rng=SeededRng(0))

    def test_width_mismatch_rejected(self):
        t = small_table(dim=4)
        with pytest.raises(DataError, match="width"):
            pretrain(t, [UserHistory("a", [[2]])],
                     Tensor(np.zeros((6, 3))), epochs=1, neg_samples=1,
                     rng=SeededRng(0))

    def test_loss_decreases_over_epochs(self):
        t = small_table(ids=("a", "b"), dim=8, seed=3)
        wv = Tensor(SeededRng(4).uniform(-0.08, 0.08, size=(10, 8)))
        hists = [UserHistory("a", [[2, 3, 2], [2, 4]]),
                 UserHistory("b", [[5, 6], [5, 7, 5]])]
        losses = []
        pretrain(t, hists, wv, epochs=25, neg_samples=3, rng=SeededRng(9),
                 epoch_losses=losses)
        assert len(losses) == 25
        assert losses[-1] < losses[0] - 1e-3
        assert np.mean(losses[-5:]) < np.mean(losses[:5])

    def test_users_align_with_their_words(self):
        # author a only ever posts token 2, author b only token 3; after
        # training, each user row scores its own token above the other's
        t = small_table(ids=("a", "b"), dim=8, seed=3)
        wv = Tensor(SeededRng(4).uniform(-0.08, 0.08, size=(6, 8)))
        hists = [UserHistory("a", [[2, 2, 2], [2, 2]]),
                 UserHistory("b", [[3, 3, 3], [3, 3]])]
        pretrain(t, hists, wv, epochs=40, neg_samples=2, rng=SeededRng(9))
        ua, ub = t.matrix.data[1], t.matrix.data[2]
        v2, v3 = wv.data[2], wv.data[3]
        # absolute signs are not guaranteed (negatives may hit the positive
        # word in a 2-word vocabulary); the separation margin is
        assert ua @ v2 - ua @ v3 > 1.0
        assert ub @ v3 - ub @ v2 > 1.0

    def test_null_row_untouched(self):
        t = small_table(ids=("a", "b"), dim=4)
        wv = Tensor(SeededRng(2).uniform(-0.1, 0.1, size=(6, 4)))
        pretrain(t, [UserHistory("a", [[2, 3]]),
                     UserHistory("b", [[4, 5]])], wv,
                 epochs=10, neg_samples=2, rng=SeededRng(0))
        assert np.all(t.matrix.data[0] == 0.0)

    def test_deterministic_given_seed(self):
        def run():
            t = small_table(ids=("a", "b"), dim=4, seed=7)
            wv = Tensor(SeededRng(8).uniform(-0.1, 0.1, size=(8, 4)))
            pretrain(t, [UserHistory("a", [[2, 3, 4]]),
                         UserHistory("b", [[5, 6]])], wv,
                     epochs=5, neg_samples=3, rng=SeededRng(42))
            return t.matrix.data.copy(), wv.data.copy()

        (t1, w1), (t2, w2) = run(), run()
        np.testing.assert_array_equal(t1, t2)
        np.testing.assert_array_equal(w1, w2)


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path):
        t = small_table(ids=("bob", "alice", "carol"), dim=5, seed=13)
        t.trainable = False
        path = tmp_path / "users.bin"
        save(t, path)
        back = load(path)
        np.testing.assert_array_equal(back.matrix.data, t.matrix.data)
        assert back.row_of == t.row_of
        assert back.trainable is False
        assert back.dim == 5

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"NOTATBL1" + b"\x00" * 32)
        with pytest.raises(FormatError, match="not a user-table file"):
            load(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"USRTBL99" + b"\x00" * 32)
        with pytest.raises(FormatError, match="version mismatch"):
            load(path)

    def test_truncated_matrix(self, tmp_path):
        t = small_table()
        path = tmp_path / "users.bin"
        save(t, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(FormatError, match="unexpected end of file"):
            load(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"USRTBL01\x40")
        with pytest.raises(FormatError, match="unexpected end of file"):
            load(path)

    def test_garbage_header(self, tmp_path):
        import struct
        path = tmp_path / "x.bin"
        payload = b"{not json}"
        path.write_bytes(b"USRTBL01" + struct.pack("<Q", len(payload))
                         + payload)
        with pytest.raises(FormatError, match="bad user-table header"):
            load(path)
