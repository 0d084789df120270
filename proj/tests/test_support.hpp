#pragma once

#include <cmath>
#include <complex>

#include <doctest.h>

using cplx = std::complex<double>;

inline double rel_err(cplx got, cplx want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

#define CHECK_REL(got, want, tol)                                                        \
    do {                                                                                 \
        const cplx got_ = (got), want_ = (want);                                         \
        CHECK_MESSAGE(rel_err(got_, want_) <= (tol),                                     \
                      "got " << got_ << " want " << want_ << " rel " << rel_err(got_, want_)); \
    } while (0)
#define CHECK_ABS(got, want, tol)                                                        \
    do {                                                                                 \
        const cplx got_ = (got), want_ = (want);                                         \
        CHECK_MESSAGE(std::abs(got_ - want_) <= (tol), "got " << got_ << " want " << want_); \
    } while (0)
