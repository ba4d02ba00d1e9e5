#!/usr/bin/env python3
"""Reference values for the Welch t-test fixtures embedded in src/stats.rs.

Run with scipy installed; paste the printed (t, p) pairs into the
`welch_matches_reference_fixtures` test if the fixtures change.
"""

from scipy import stats

FIXTURES = [
    (
        [0.496714153, -0.138264301, 0.647688538, 1.523029856,
         -0.234153375, -0.234136957, 1.579212816, 0.767434729],
        [-0.469474386, 1.042256004, 0.241962272, -1.413037391,
         -1.722765693, -1.328186048, 0.196861236, 1.338442170,
         0.171368281, -0.115648282],
    ),
    (
        [5.1, 4.9, 6.2, 5.7, 5.5, 5.9],
        [4.2, 4.8, 4.4, 4.9, 4.6],
    ),
    (
        [10.0, 10.5, 11.0, 9.5],
        [10.1, 10.4, 10.9, 9.6],
    ),
]


def main() -> None:
    for a, b in FIXTURES:
        r = stats.ttest_ind(a, b, equal_var=False)
        print(f"t = {r.statistic:.12f}  p = {r.pvalue:.12f}")


if __name__ == "__main__":
    main()
