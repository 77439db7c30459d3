"""Decide predictability of the bundled models and print their witnesses."""

from fractions import Fraction

from tapredict.fa_predict import check_k_predictable, max_k
from tapredict.modelio import bundled_model
from tapredict.ta_predict import SamplingSpec, check_delta_predictable, max_delta


def main():
    g = bundled_model("G_untimed")
    print("G_untimed: max k =", max_k(g))
    w = check_k_predictable(g, 1).witness
    print("  k=1 refuted; prefaulty", w.prefaulty.events, "vs lasso", w.stem.events, w.cycle.events)

    for name, sampling in [("G", None), ("B", None), ("B", SamplingSpec(Fraction(3, 5)))]:
        m = bundled_model(name)
        best = max_delta(m, sampling=sampling)
        tag = f"{name} sampled at {sampling.rate}" if sampling else name
        print(f"{tag}: max bound = {best}")
        v = check_delta_predictable(m, best + 1, sampling=sampling)
        w = v.witness
        print(f"  bound {best + 1} refuted: switch at {w.switch_time / w.scale}, "
              f"fault at {w.fault_time / w.scale}")


if __name__ == "__main__":
    main()
