#pragma once

namespace linecancel {

/// Bessel function of the first kind, order zero.
///
/// Power series (accumulated in long double) for |z| < 12 and the Hankel
/// asymptotic expansion, truncated at its smallest term, beyond. Absolute
/// error is below 1e-10 for |z| <= 100 and shrinks further for larger |z|.
/// Throws DomainError for non-finite z.
double bessel_j0(double z);

}  // namespace linecancel
