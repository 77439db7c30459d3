"""Run the online predictor for B on a delay-only observation."""

from fractions import Fraction

from tapredict.modelio import bundled_model
from tapredict.predictor import run_predictor
from tapredict.timed.automaton import TimedWord


def main():
    b = bundled_model("B")
    for delta, alpha in [(4, Fraction(1)), (6, Fraction(3, 5))]:
        result = run_predictor(b, delta, alpha, TimedWord.parse("3"))
        print(f"Δ={delta}, α={alpha}:")
        for t, alarm in result.verdicts:
            print(f"  t={t}: {int(alarm)}")
        print("  first alarm at", result.first_alarm())


if __name__ == "__main__":
    main()
