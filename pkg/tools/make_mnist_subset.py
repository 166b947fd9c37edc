"""Convert the 5000-image MNIST subset shipped inside the mlxtend wheel to IDX files.

The subset (500 images per digit, drawn from the MNIST training set) is the
only MNIST data reachable offline here. Usage::

    python tools/make_mnist_subset.py path/to/mlxtend-*.whl tests/data

If mlxtend is installed, the wheel argument may be ``-`` to read the
installed copy instead.
"""

import gzip
import io
import sys
import zipfile
from importlib import resources
from pathlib import Path

import numpy as np

from quantgt.dataio import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_subset(source):
    if source == "-":
        raw = resources.files("mlxtend.data").joinpath("data/mnist_5k.csv.gz").read_bytes()
    else:
        raw = zipfile.ZipFile(source).read(MEMBER)
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")
    return table[:, :-1].astype(np.uint8).reshape(-1, 28, 28), table[:, -1].astype(np.uint8)


def main(argv):
    source, out = argv[1], Path(argv[2])
    out.mkdir(parents=True, exist_ok=True)
    images, labels = read_subset(source)
    write_idx(images, labels, out / "train-images-idx3-ubyte.gz", out / "train-labels-idx1-ubyte.gz")
    print(f"wrote {len(labels)} images to {out}; per digit: {np.bincount(labels).tolist()}")


if __name__ == "__main__":
    main(sys.argv)
