"""Export a model as a weights bundle, probe it from disk, and read it back.

The same flow works for any named set of 2-D float32 matrices, which is how
weights from other architectures can be probed without retraining.
"""
import tempfile
from pathlib import Path

import numpy as np

from signprobe.bundle import WeightsBundle, bundle_to_model, model_to_bundle, read_bundle, write_bundle
from signprobe.core import rng_new
from signprobe.mlp import init_model
from signprobe.probes import Prune, apply_to_matrices, parse_probe

tmp = Path(tempfile.mkdtemp())
model = init_model(8, rng_new(0), n_inputs=784)
path = write_bundle(model_to_bundle(model), tmp / "mlp.sbpw")
b = read_bundle(path)
print(f"{path.name}: {path.stat().st_size} bytes, matrices {b.names}, metadata {b.metadata}")
print("round trip equal:", np.array_equal(bundle_to_model(b).W1, model.W1.astype(np.float32)))

# Foreign weights: a named attention projection plus a bias row kept out of probing.
gen = np.random.default_rng(0)
foreign = WeightsBundle([("attn.q", gen.normal(size=(16, 16)).astype(np.float32)),
                         ("attn.q_bias", gen.normal(size=(1, 16)).astype(np.float32))],
                        {"probe_exclude": "attn.q_bias"})
spec = parse_probe("prune:0.75")
assert spec == Prune(0.75)
probed = apply_to_matrices([foreign["attn.q"].astype(np.float64)], spec)
print(f"attn.q nonzeros after prune:0.75 -> {np.count_nonzero(probed[0])} of 256")
