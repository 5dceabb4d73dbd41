"""Per-degree compactness table for decoupled power-sum and gaussian weights on C^2."""

from dbarspec import decoupled as D
from dbarspec import weights as W

CASES = {
    "|z1|^4 + |z2|^4": W.power_sum([4, 4]),
    "|z1|^4 + |z2|^6": W.power_sum([4, 6]),
    "|z1|^4 + |z2|^2": W.power_sum([4, 2]),
    "|z1|^2 + |z2|^2": W.decoupled(W.gaussian(), W.gaussian()),
}


def main():
    print(f"{'weight':18s} {'N_00':12s} {'N_01':12s} {'N_02':12s}")
    for label, dw in CASES.items():
        rep = D.compactness_report(dw)
        cells = []
        for q in range(3):
            c = rep.verdicts[str(q)]["compact"]
            cells.append("withheld" if c is None else "compact" if c else "non-compact")
        print(f"{label:18s} " + " ".join(f"{c:12s}" for c in cells))


if __name__ == "__main__":
    main()
