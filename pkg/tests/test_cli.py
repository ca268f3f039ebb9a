"""CLI smoke tests through click's runner."""

import json

import numpy as np
from click.testing import CliRunner

from restyle.cli import demo_images, main
from restyle.imaging import load_png, save_png
from restyle.network import save_weights, tiny_network


def test_run_command(tmp_path):
    content, style = demo_images(48)
    save_png(content, tmp_path / "c.png")
    save_png(style, tmp_path / "s.png")
    out = tmp_path / "out.png"
    result = CliRunner().invoke(
        main,
        [
            "run",
            "--content", str(tmp_path / "c.png"),
            "--style", str(tmp_path / "s.png"),
            "--out", str(out),
            "--num-iterations", "4",
            "--save-every", "2",
            "--size", "32",
            "--weights", "tiny:7",
            "--frames-dir", str(tmp_path / "frames"),
            "--losses-csv", str(tmp_path / "losses.csv"),
        ],
    )
    assert result.exit_code == 0, result.output
    assert out.is_file()
    assert len(list((tmp_path / "frames").glob("*.png"))) == 3  # iterations 0, 2, 4
    rows = (tmp_path / "losses.csv").read_text().strip().splitlines()
    assert len(rows) - 1 == 4


def test_run_with_weight_file(tmp_path):
    content, style = demo_images(32)
    save_png(content, tmp_path / "c.png")
    save_png(style, tmp_path / "s.png")
    save_weights(tiny_network(3), tmp_path / "w.nstw")
    result = CliRunner().invoke(
        main,
        [
            "run",
            "--content", str(tmp_path / "c.png"),
            "--style", str(tmp_path / "s.png"),
            "--out", str(tmp_path / "o.png"),
            "--num-iterations", "2",
            "--size", "32",
            "--weights", str(tmp_path / "w.nstw"),
        ],
    )
    assert result.exit_code == 0, result.output


def test_run_rejects_bad_weights_spec(tmp_path):
    content, style = demo_images(32)
    save_png(content, tmp_path / "c.png")
    save_png(style, tmp_path / "s.png")
    result = CliRunner().invoke(
        main,
        [
            "run",
            "--content", str(tmp_path / "c.png"),
            "--style", str(tmp_path / "s.png"),
            "--out", str(tmp_path / "o.png"),
            "--weights", "tiny:notanint",
        ],
    )
    assert result.exit_code != 0


def test_presets_command():
    result = CliRunner().invoke(main, ["presets"])
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["recommended"]["num_iterations"] == 300


def test_sweep_command(tmp_path):
    content, style = demo_images(32)
    save_png(content, tmp_path / "c.png")
    save_png(style, tmp_path / "s.png")
    spec = {
        "name": "tv",
        "base": {"num_iterations": 2, "image_size": 32},
        "varied_parameter": "tv_strength",
        "values": [1e-6, 1e-2],
        "content_images": [str(tmp_path / "c.png")],
        "style_images": [str(tmp_path / "s.png")],
        "output_dir": str(tmp_path / "out"),
    }
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    result = CliRunner().invoke(main, ["sweep", str(tmp_path / "spec.json"), "--weights", "tiny:7"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "tv" / "c" / "sheet.png").is_file()


def test_sample_images_command(tmp_path):
    result = CliRunner().invoke(main, ["sample-images", "--out", str(tmp_path), "--size", "48"])
    assert result.exit_code == 0, result.output
    image = load_png(tmp_path / "content.png")
    assert max(image.width, image.height) == 48
    assert np.array_equal(load_png(tmp_path / "style.png").pixels,
                          demo_images(48)[1].pixels)
