"""The task graph and the capsule encoder, and why node order does not matter.

Run:  python demos/02_graph_and_encoder.py
"""
import numpy as np

from capam.instances import generate_instance
from capam.model import CapAM, ModelConfig
from capam.simulator import run_episode

inst = generate_instance(8, 2, np.random.default_rng(3))
model = CapAM(ModelConfig(h0=32, h_l=32, K=2, P=3, L_e=1, h_e=8), seed=0)

graph = model.graph(inst)
print("normalized features (x, y, deadline):\n", np.round(graph.X[:3], 3))
print("edge weights of node 0:", np.round(graph.A[0], 3))
print("Laplacian row sums:", np.round(graph.L.sum(axis=1), 12))

emb = model.embed(graph).data
print("embedding shape:", emb.shape)

# Shuffle the task list: the embeddings shuffle with it, and the policy
# picks the same physical tasks in the same order.
perm = np.random.default_rng(1).permutation(inst.n_tasks)
shuffled = inst.permuted(perm)
emb2 = model.embed(model.graph(shuffled)).data
print("max |emb(shuffled) - emb[perm]| =", np.abs(emb2 - emb[perm]).max())

a = run_episode(inst, model).actions
b = [int(perm[t]) for t in run_episode(shuffled, model).actions]
print("greedy visit order:", a)
print("same order after shuffling:", a == b)

# Nothing in the parameters depends on N, so one model handles any size.
for n in (5, 50, 200):
    big = generate_instance(n, 4, np.random.default_rng(n))
    print(f"N={n:3d}: embedding {model.embed(model.graph(big)).shape}")
