#!/usr/bin/env python3
"""Plot a simulate log.csv: CoM tracking, angular momentum, vertical forces.

usage: plot_log.py out/walking_payload/log.csv [--save figure.png]
"""
import argparse

import matplotlib.pyplot as plt
import pandas as pd


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("--save", help="write the figure instead of showing it")
    args = parser.parse_args()

    log = pd.read_csv(args.csv)
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))

    for axis, color in zip("xyz", ("C0", "C1", "C2")):
        axes[0].plot(log.t, log[f"com_{axis}"], color=color, label=f"com {axis}")
        axes[0].plot(log.t, log[f"ref_com_{axis}"], color=color, linestyle="--")
    axes[0].set_ylabel("CoM [m]")
    axes[0].legend(loc="best")

    for axis in "xyz":
        axes[1].plot(log.t, log[f"hw_{axis}"], label=f"L {axis}")
    axes[1].set_ylabel("angular momentum")
    axes[1].legend(loc="best")

    contact = 0
    while f"f{contact}_z" in log:
        axes[2].plot(log.t, log[f"f{contact}_z"], label=f"contact {contact}")
        contact += 1
    axes[2].plot(log.t, -log.d_fz_total, color="k", linestyle=":", label="payload weight")
    axes[2].set_ylabel("F_z [N]")
    axes[2].set_xlabel("t [s]")
    axes[2].legend(loc="best")

    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
