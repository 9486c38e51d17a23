import json

from bsdverify.cli import load_corpus, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bundled_corpus():
    recs = load_corpus()
    assert len(recs) >= 25
    assert all(r.conductor <= 1000 for r in recs)


def test_curve_info(capsys):
    code, out, _ = run(capsys, "curve", "info", "37a1")
    assert code == 0
    assert "conductor: 37" in out and "local 37: I1" in out
    assert "torsion: order 1" in out and "root_number: -1" in out


def test_curve_info_errors(capsys):
    assert run(capsys, "curve", "info", "0,0,0,0,0")[0] == 2
    code, _, err = run(capsys, "curve", "info", "nosuchcurve")
    assert code == 3 and "nosuchcurve" in err
    assert run(capsys, "curve", "info")[0] == 2


def test_lfun(capsys):
    code, out, _ = run(capsys, "lfun", "11a1", "--prec", "30")
    assert code == 0 and "analytic_rank: 0" in out and "sha_an: 1" in out
    code, out, _ = run(capsys, "lfun", "37a1")
    assert code == 0 and "analytic_rank: 1" in out and "l_derivative: 0.30599977383405230182" in out
    assert run(capsys, "lfun", "389a1")[0] == 4


def test_heegner(capsys):
    code, out, _ = run(capsys, "heegner", "37a1", "-p", "5")
    assert code == 0 and "D: -11" in out and "index: 1" in out and "pass" in out
    assert run(capsys, "heegner", "37a1", "-p", "5", "--dmax", "5")[0] == 5
    assert run(capsys, "heegner", "11a1", "-p", "3")[0] == 4
    code, out, _ = run(capsys, "heegner", "37a1", "-p", "5", "--role", "kp")
    assert code == 0 and "not computed" in out


def test_verify(capsys, tmp_path):
    out_file = tmp_path / "cert.json"
    code, out, _ = run(capsys, "verify", "37a1", "-p", "5", "--out", str(out_file))
    assert code == 0
    cert = json.loads(out_file.read_text())
    assert cert["verdict"] == "verified" and json.loads(out) == cert
    assert run(capsys, "verify", "11a1", "-p", "5")[0] == 1
    assert run(capsys, "verify", "389a1", "-p", "5")[0] == 4


def test_batch_malformed_line(capsys, tmp_path):
    f = tmp_path / "in.jsonl"
    f.write_text('{"label": "37a1", "ainvs": [0, 0, 1, -1, 0]}\n\n{"label": "oops"\n')
    code, _, err = run(capsys, "batch", str(f))
    assert code == 2 and ":3:" in err
    f.write_text('{"label": "s", "ainvs": [0, 0, 0, 0, 0]}\n')
    code, _, err = run(capsys, "batch", str(f))
    assert code == 2 and ":1:" in err


def test_batch_outputs(capsys, tmp_path):
    f = tmp_path / "in.jsonl"
    f.write_text('{"label": "37a1", "ainvs": [0, 0, 1, -1, 0]}\n{"label": "11a1", "ainvs": [0, -1, 1, -10, -20]}\n')
    out = tmp_path / "certs.jsonl"
    code, _, err = run(capsys, "batch", str(f), "--out", str(out))
    assert code == 1  # 11a1 is rank zero, so not every certificate is verified
    lines = out.read_text().splitlines()
    assert [json.loads(l)["label"] for l in lines][:3] == ["11a1"] * 3
    summary = json.loads(err.strip().splitlines()[-1])
    assert summary["verified"] == 4
