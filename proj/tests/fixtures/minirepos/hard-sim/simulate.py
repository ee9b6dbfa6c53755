"""Damped lattice relaxation driven by data/params.txt."""
import math
import os

PARAMS_FILE = "data/params.txt"


def load_params(path):
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = float(value)
    return values


def relax(coupling, steps):
    energy = coupling
    trace = []
    for _ in range(steps):
        energy = energy * math.exp(-0.1) + coupling * 0.05
        trace.append(energy)
    return trace


def main():
    params = load_params(PARAMS_FILE)
    trace = relax(params["coupling"], int(params["steps"]))
    os.makedirs("results", exist_ok=True)
    with open("results/energy.txt", "w") as fh:
        for step, energy in enumerate(trace):
            fh.write("%d\t%.8f\n" % (step, energy))


if __name__ == "__main__":
    main()
