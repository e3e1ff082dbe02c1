"""Load MNIST from the local cache and rank digit pairs by class-mean SSIM.

Run `signprobe fetch-data` first.  Prints the most and least similar pairs
and the distance of the pairs used elsewhere in these demos.
"""
import numpy as np

from signprobe.data import extreme_pairs, load_dataset, make_pair_task, ssim_distance_matrix

train, test = load_dataset("mnist")
print(f"train {train.images.shape}, test {test.images.shape}")

task = make_pair_task(train, test, 0, 7)
print(f"0 vs 7: {len(task.train_targets)} train / {len(task.test_targets)} test examples, "
      f"inputs in [{task.train_inputs.min()}, {task.train_inputs.max()}]")

dist = ssim_distance_matrix(train)
np.set_printoptions(precision=3, suppress=True, linewidth=120)
print("SSIM distance between class-mean images:")
print(dist)

far, near = extreme_pairs(dist)
print(f"most distinct pair {far}, most similar pair {near}")
print(f"d(0,7) = {dist[0, 7]:.3f}   d(7,9) = {dist[7, 9]:.3f}")
