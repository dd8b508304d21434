"""Build data/mnist17.libsvm: the MNIST digits 1 and 7 in libsvm format.

Pixels come from the `mnist` npm package (1.1.0), which ships a subset of the
MNIST digits as flat JSON arrays of 28x28 intensities in [0, 1]. Only nonzero
pixels are written. Labels are the digits themselves (1 and 7).

    python3 scripts/make_mnist17.py [--package DIR] [--out data/mnist17.libsvm]

Without --package the tarball is fetched with `npm pack`.
"""

import argparse
import json
import pathlib
import subprocess
import tarfile
import tempfile

PIXELS = 28 * 28


def load_digit(package: pathlib.Path, digit: int) -> list[list[float]]:
    flat = json.loads((package / "src" / "digits" / f"{digit}.json").read_text())["data"]
    assert len(flat) % PIXELS == 0, f"digit {digit}: {len(flat)} values"
    return [flat[i : i + PIXELS] for i in range(0, len(flat), PIXELS)]


def fetch_package(workdir: pathlib.Path) -> pathlib.Path:
    out = subprocess.run(
        ["npm", "pack", "mnist@1.1.0", "--silent"], cwd=workdir, check=True, capture_output=True, text=True
    )
    with tarfile.open(workdir / out.stdout.strip().splitlines()[-1]) as tar:
        tar.extractall(workdir, filter="data")
    return workdir / "package"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--package", type=pathlib.Path, help="unpacked mnist npm package")
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/mnist17.libsvm"))
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        package = args.package or fetch_package(pathlib.Path(tmp))
        lines = []
        for digit in (1, 7):
            for image in load_digit(package, digit):
                feats = " ".join(f"{j + 1}:{v:g}" for j, v in enumerate(image) if v != 0)
                lines.append(f"{digit} {feats}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} rows to {args.out}")


if __name__ == "__main__":
    main()
