import pytest

from cclab import experiments as ex
from cclab.cli import main
from cclab.errors import ConfigError

SMALL = {
    "cover-verify": "k = 2\nN = 20\nsamples = 20000\n",
    "hilbert-example": "k = 2\nN = 20\nrestarts = 1\nsteps = 20\n",
    "cube-cylinder": "N = 6\ncovers = 3\n",
    "diameter": "covers = 3\nresolution = 32\nmin_success = 1.0\n",
    "inradius": 'body = {"type": "ball", "dim": 4}\nn = 2\nrestarts = 1\nsteps = 10\n',
    "rho-curve": 'body = {"type": "box", "lo": [-1, -1, -1], "hi": [1, 1, 1]}\nn_list = [1, 2]\nrestarts = 1\nsteps = 10\n',
    "concentration": "Ns = [50, 100]\ntrials = 10\nreps = 2\nsamples = 256\n",
    "sphere-cover": "cover = hemisphere\nN = 30\neps = 0.4\n",
    "projection": "count = 2\nsamples = 1000\n",
    "translate": "case = hexagon-pad\nN = 6\nsamples = 1000\n",
    "hilbert-codim": "samples = 1000\n",
    "counterexample": "samples = 5000\n",
    "hexagon": "samples = 5000\nmesh = 64\n",
}


def write(tmp_path, name, kind, body):
    p = tmp_path / f"{name}.cfg"
    p.write_text(f"kind = {kind}\nseed = 1\n" + body)
    return p


def test_every_kind_has_a_small_config():
    assert set(SMALL) == set(ex.KINDS)


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_run_each_kind(tmp_path, kind):
    cfg = write(tmp_path, "c", kind, SMALL[kind])
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    first = (out / "c.csv").read_text()
    header = first.splitlines()[0].split(",")
    assert header == ex.KINDS[kind].columns
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    assert (out / "c.csv").read_text() == first
    summary = (out / "c.txt").read_text()
    assert f"kind: {kind}" in summary and "status: " in summary


def test_hilbert_example_table(tmp_path):
    cfg = write(tmp_path, "h", "hilbert-example", SMALL["hilbert-example"])
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "h.csv").read_text()
    assert "bound,2,,,0.758744956" in text


def test_failing_run_exit_one(tmp_path):
    cfg = write(tmp_path, "f", "inradius", 'body = {"type": "ball", "dim": 3}\nn = 1\nmax_radius = 0.5\n'
                "restarts = 1\nsteps = 5\n")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 1


def test_exhausted_search_is_fail(tmp_path):
    cfg = write(tmp_path, "s", "sphere-cover", "N = 8\nn = 1\neps = 0.05\np = linf\ntrials = 5\n")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("text", [
    "kind = hexagon\nbogus = 1\n",
    "kind = nonsense\n",
    "seed = 1\n",
    "kind = hexagon\nsamples = many\n",
    "kind = hexagon\nsamples = 1\nsamples = 2\n",
    "kind = hexagon\njust words\n",
    "kind = sphere-cover\ncover = squares\n",
    "kind = inradius\nbody = {\"type\": \"blob\"}\n",
])
def test_malformed_configs_exit_two(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    assert main(["run", str(p), "--out", str(tmp_path)]) == 2


def test_missing_file_exit_two(tmp_path):
    assert main(["run", str(tmp_path / "none.cfg")]) == 2


def test_bad_arguments_exit_two():
    assert main(["frobnicate"]) == 2


def test_overrides(tmp_path):
    cfg = write(tmp_path, "o", "hexagon", SMALL["hexagon"])
    assert main(["run", str(cfg), "--out", str(tmp_path), "--samples", "123", "--seed", "9"]) == 0
    text = (tmp_path / "o.txt").read_text()
    assert '"samples": 123' in text and "seed: 9" in text
    # hexagon has no search budget
    assert main(["run", str(cfg), "--budget", "3"]) == 2


def test_budget_override(tmp_path):
    cfg = write(tmp_path, "b", "projection", SMALL["projection"])
    assert main(["run", str(cfg), "--out", str(tmp_path), "--budget", "1"]) == 0
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 2


def test_config_comments_and_json_values():
    cfg = ex.parse_config_text("# header\nkind = rho-curve  # trailing\nn_list = [1, 2]\nnorm = linf\n")
    assert cfg == {"kind": "rho-curve", "n_list": [1, 2], "norm": "linf"}
    v = ex.validate(cfg)
    assert v["restarts"] == 16 and v["name"] == "rho-curve"


def test_validate_rejects_negative():
    with pytest.raises(ConfigError):
        ex.validate({"kind": "hexagon", "samples": -1})


def test_batch_pass_and_merge(tmp_path, monkeypatch):
    d = tmp_path / "cfgs"
    d.mkdir()
    write(d, "a", "hexagon", SMALL["hexagon"])
    write(d, "b", "counterexample", SMALL["counterexample"])
    write(d, "c", "hexagon", "samples = 100\nmesh = 16\n")
    monkeypatch.setenv("CCLAB_THREADS", "3")
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["batch", str(d), "--out", str(out1)]) == 0
    monkeypatch.setenv("CCLAB_THREADS", "1")
    assert main(["batch", str(d), "--out", str(out2)]) == 0
    for name in ("batch_summary.csv", "batch_hexagon.csv", "batch_counterexample.csv"):
        assert (out1 / name).read_text() == (out2 / name).read_text()
    merged = (out1 / "batch_hexagon.csv").read_text().splitlines()
    assert merged[0].startswith("config,")


def test_batch_failure_names_member(tmp_path, capsys):
    d = tmp_path / "cfgs"
    d.mkdir()
    write(d, "good", "hexagon", SMALL["hexagon"])
    write(d, "bad", "inradius", 'body = {"type": "ball", "dim": 3}\nn = 1\nmax_radius = 0.5\n'
          "restarts = 1\nsteps = 5\n")
    assert main(["batch", str(d), "--out", str(tmp_path / "o")]) == 1
    assert "bad" in capsys.readouterr().out.splitlines()[-1]


def test_batch_empty_dir(tmp_path):
    assert main(["batch", str(tmp_path)]) == 2


def test_batch_config_error(tmp_path):
    d = tmp_path / "cfgs"
    d.mkdir()
    (d / "x.cfg").write_text("kind = hexagon\nwhat = 1\n")
    assert main(["batch", str(d)]) == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("CCLAB_THREADS", "abc")
    with pytest.raises(ConfigError):
        ex.thread_count()
    monkeypatch.setenv("CCLAB_THREADS", "0")
    assert ex.thread_count() == 1
