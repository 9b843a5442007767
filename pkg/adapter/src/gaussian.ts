/**
 * Standard normal CDF via an erfc rational approximation
 * (relative error below 1.2e-7 over the real line, monotone enough for
 * cell integration; cell masses are clamped at zero and renormalized
 * downstream).
 */
export function normalCdf(x: number, mean = 0, std = 1): number {
  const z = (x - mean) / std;
  return 0.5 * erfc(-z / Math.SQRT2);
}

export function erfc(x: number): number {
  const ax = Math.abs(x);
  const t = 1 / (1 + ax / 2);
  // Numerical-Recipes style Chebyshev fit for erfc
  const tau =
    t *
    Math.exp(
      -ax * ax -
        1.26551223 +
        t *
          (1.00002368 +
            t *
              (0.37409196 +
                t *
                  (0.09678418 +
                    t *
                      (-0.18628806 +
                        t *
                          (0.27886807 +
                            t *
                              (-1.13520398 +
                                t *
                                  (1.48851587 +
                                    t * (-0.82215223 + t * 0.17087277)))))))),
    );
  return x >= 0 ? tau : 2 - tau;
}
