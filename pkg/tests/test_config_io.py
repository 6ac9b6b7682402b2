import struct
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sllg.config import RunConfig, parse_noise
from sllg.diagnostics import RECORD_FIELDS, DiagnosticsRecord
from sllg.errors import ChecksumError, ConfigError, SnapshotFormatError, SnapshotVersionError, TruncatedSnapshotError
from sllg.initial_data import AnsatzSpec
from sllg.io import CSV_SCHEMA, DiagnosticsCSV, SnapshotFile, read_diagnostics_csv
from sllg.spectral import TorusGrid, VectorField

finite = st.floats(1e-6, 1e3, allow_nan=False)


class TestRunConfig:
    def test_defaults_round_trip(self):
        c = RunConfig()
        assert RunConfig.loads(c.dumps()) == c

    @given(
        dim=st.sampled_from([1, 2, 3]),
        n=st.integers(2, 16).map(lambda k: 2 * k),
        T=st.floats(0, 10, allow_nan=False),
        steps=st.integers(1, 10_000),
        lam=finite,
        eps=finite,
        seed=st.integers(0, 2**62),
        cutoff=st.none() | finite,
        renormalize=st.booleans(),
    )
    def test_round_trip_is_lossless(self, **kw):
        c = RunConfig(initial=AnsatzSpec("perturbed-constant", {"seed": 4, "amplitude": 0.1234567891234}), **kw)
        back = RunConfig.loads(c.dumps())
        assert back == c
        assert back.dumps() == c.dumps()

    def test_tuple_params_round_trip(self):
        c = RunConfig(dim=3, initial=AnsatzSpec("single-harmonic", {"k": (1,), "axes": (0, 2)}))
        assert RunConfig.loads(c.dumps()).initial.params == {"k": (1,), "axes": (0, 2)}

    def test_save_and_load(self, tmp_path):
        c = RunConfig(dim=3, n=24, noise="const:0,0,0.5;mode:1,0,0:0.3,0,0")
        c.save(tmp_path / "run.ini")
        assert RunConfig.load(tmp_path / "run.ini") == c

    @pytest.mark.parametrize(
        "kw", [{"n": 15}, {"n": 2}, {"dim": 4}, {"T": -1.0}, {"steps": 0}, {"lam": 0.0}, {"scheme": "rk4"}, {"seed": -1}]
    )
    def test_validation(self, kw):
        with pytest.raises(ConfigError):
            RunConfig(**kw)

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            RunConfig.loads("[grid]\nsize = 4\n")
        with pytest.raises(ConfigError):
            RunConfig().with_overrides({"grid.size": "4"})

    def test_malformed(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.loads("n = 4")
        with pytest.raises(ConfigError):
            RunConfig.loads("[grid]\nn = sixteen\n")
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / "missing.ini")

    def test_overrides(self):
        c = RunConfig().with_overrides(
            {"grid.n": "32", "lam": "0.5", "scheme.renormalize": "yes", "grid.cutoff": "16", "initial.kind": "skyrmion-2d", "initial.R": "0.25"}
        )
        assert (c.n, c.lam, c.renormalize, c.cutoff) == (32, 0.5, True, 16.0)
        assert c.initial == AnsatzSpec("skyrmion-2d", {"R": 0.25})
        assert c.with_overrides({"grid.cutoff": "none"}).cutoff is None

    def test_derived_objects(self):
        c = RunConfig(dim=2, n=8, T=0.5, steps=50, cutoff=9.0, noise="none")
        assert c.dt == pytest.approx(0.01)
        assert c.model_params().n_noises == 0
        assert c.scheme_config().cutoff.radius_squared == 9.0
        assert c.initial_field().grid == TorusGrid(2, 8)

    def test_output_root(self, monkeypatch, tmp_path):
        monkeypatch.setenv("SLLG_OUTPUT_ROOT", str(tmp_path))
        assert RunConfig(output_dir="a").resolved_output_dir() == tmp_path / "a"
        assert RunConfig(output_dir="/abs").resolved_output_dir().as_posix() == "/abs"
        monkeypatch.delenv("SLLG_OUTPUT_ROOT")
        assert RunConfig(output_dir="a").resolved_output_dir().as_posix() == "a"


class TestNoise:
    def test_presets(self):
        g = TorusGrid(2, 8)
        assert parse_noise("none", g) == ()
        assert parse_noise("uniform", g) == ((0.0, 0.0, 1.0),)

    def test_mode(self):
        g = TorusGrid(2, 8)
        (h,) = parse_noise("mode:1,1,0:0.5,0,0", g)
        x, y = g.coords()
        np.testing.assert_allclose(h.values[0], 0.5 * np.cos(2 * np.pi * (x + y)))
        assert np.all(h.values[1:] == 0)

    @pytest.mark.parametrize("spec", ["const:1,2", "wave:1,0,0", "mode:1,0,0", "const:a,b,c"])
    def test_bad(self, spec):
        with pytest.raises(ConfigError):
            parse_noise(spec, TorusGrid(1, 4))


def sample_snapshot(dim=2, n=8, seed=3):
    g = TorusGrid(dim, n)
    values = np.random.default_rng(seed).standard_normal((3,) + g.shape)
    return SnapshotFile(VectorField(g, values), 0.125, 1.0, 0.1, 42, "imex-heun")


class TestSnapshot:
    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_round_trip_bitwise(self, dim, tmp_path):
        s = sample_snapshot(dim)
        s.write(tmp_path / "a.sllg")
        back = SnapshotFile.read(tmp_path / "a.sllg")
        assert np.array_equal(back.field.values, s.field.values)
        assert (back.t, back.lam, back.eps, back.seed, back.scheme) == (s.t, s.lam, s.eps, s.seed, s.scheme)
        assert back.to_bytes() == s.to_bytes()

    def test_layout(self):
        s = sample_snapshot(2, 4)
        data = s.to_bytes()
        header = struct.calcsize("<4sHBIdddq32s")
        assert len(data) == header + 3 * 16 * 8 + 4
        assert data[:4] == b"SLLG"
        # component-major, first axis fastest
        first = np.frombuffer(data, "<f8", count=4, offset=header)
        np.testing.assert_array_equal(first, s.field.values[0][:, 0])
        assert struct.unpack("<I", data[-4:])[0] == zlib.crc32(data[:-4])

    def test_no_seed(self):
        s = sample_snapshot()
        s.seed = None
        assert SnapshotFile.from_bytes(s.to_bytes()).seed is None

    def test_corrupted_byte(self):
        data = bytearray(sample_snapshot().to_bytes())
        data[100] ^= 0x01
        with pytest.raises(ChecksumError):
            SnapshotFile.from_bytes(bytes(data))

    def test_truncated(self):
        data = sample_snapshot().to_bytes()
        for cut in (3, 40, len(data) - 1):
            with pytest.raises(TruncatedSnapshotError):
                SnapshotFile.from_bytes(data[:cut])

    def test_version(self):
        data = bytearray(sample_snapshot().to_bytes())
        data[4:6] = struct.pack("<H", 9)
        with pytest.raises(SnapshotVersionError):
            SnapshotFile.from_bytes(bytes(data))

    def test_magic_and_trailing(self):
        data = sample_snapshot().to_bytes()
        with pytest.raises(SnapshotFormatError):
            SnapshotFile.from_bytes(b"XXXX" + data[4:])
        with pytest.raises(SnapshotFormatError):
            SnapshotFile.from_bytes(data + b"\0")

    def test_long_scheme_tag(self):
        s = sample_snapshot()
        s.scheme = "x" * 33
        with pytest.raises(ValueError):
            s.to_bytes()


def record(t, charge=None):
    return DiagnosticsRecord(t, 1.0 / 3.0, 2.0, 3.0, 0.5, 1e-17, 0.0, charge)


class TestCSV:
    def test_write_append_read(self, tmp_path):
        path = tmp_path / "d.csv"
        DiagnosticsCSV(path).append([record(0.0), record(0.1, 1.0)])
        DiagnosticsCSV(path).append([record(0.2)])
        lines = path.read_text().splitlines()
        assert lines[0] == f"# {CSV_SCHEMA}"
        assert lines[1] == ",".join(RECORD_FIELDS)
        rows = read_diagnostics_csv(path)
        assert [r.t for r in rows] == [0.0, 0.1, 0.2]
        assert rows[0] == record(0.0)
        assert rows[1].charge == 1.0

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(SnapshotFormatError):
            DiagnosticsCSV(path)
        with pytest.raises(SnapshotFormatError):
            read_diagnostics_csv(path)
