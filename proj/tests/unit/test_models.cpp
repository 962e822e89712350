#include <gtest/gtest.h>

#include <cmath>

#include "mmhedge/errors.hpp"
#include "mmhedge/models.hpp"
#include "mmhedge/surface.hpp"

using namespace mmhedge;

namespace {

// Reference values from an independent scipy implementation.
struct BsCase {
    double sigma, tau, m, price, delta, vega_n, digital;
};
constexpr BsCase kCases[] = {
    {0.2, 0.5, 0.0, 0.056371977797017, 0.528185988898508, 0.281390435606505, 0.471814011101492},
    {0.3, 1.0, -0.1, 0.167341335823867, 0.685570462138822, 0.354962159281937, 0.518229126314956 / 0.904837418035960},
    {0.15, 0.25, 0.1, 0.003341019334865, 0.097516455654688, 0.086148930743392, 0.094175436319823 / 1.105170918075648},
};

}  // namespace

TEST(BlackScholes, ReferenceValues) {
    for (const auto& c : kCases) {
        const BsQuote q{c.sigma, c.tau, c.m};
        EXPECT_NEAR(bs_price(q), c.price, 1e-13);
        EXPECT_NEAR(bs_delta(q), c.delta, 1e-13);
        EXPECT_NEAR(bs_vega_normalized(q), c.vega_n, 1e-13);
        EXPECT_NEAR(bs_vega(q, 250.0), 250.0 * c.vega_n, 1e-10);
        EXPECT_NEAR(bs_digital_price(q), c.digital, 1e-12);
    }
}

TEST(BlackScholes, DeltaIsSpotDerivative) {
    // C = S c~(ln K/S); bump S holding K fixed.
    const double S = 100.0, K = 104.0, tau = 0.4, sigma = 0.25, h = 1e-3;
    auto C = [&](double s) { return s * bs_price({sigma, tau, std::log(K / s)}); };
    const double fd = (C(S + h) - C(S - h)) / (2 * h);
    EXPECT_NEAR(bs_delta({sigma, tau, std::log(K / S)}), fd, 1e-8);
}

TEST(BlackScholes, DigitalDeltaIsSpotDerivative) {
    const double S = 100.0, K = 97.0, tau = 0.3, sigma = 0.2, h = 1e-3;
    auto D = [&](double s) { return bs_digital_price({sigma, tau, std::log(K / s)}); };
    EXPECT_NEAR(bs_digital_delta({sigma, tau, std::log(K / S)}, S), (D(S + h) - D(S - h)) / (2 * h), 1e-8);
}

TEST(BlackScholes, PutCallParityInSpotNumeraire) {
    // c~ - p~ = 1 - e^m with p~ priced by symmetry.
    const double sigma = 0.3, tau = 0.7, m = 0.05;
    const double d1 = bs_d1({sigma, tau, m}), d2 = d1 - sigma * std::sqrt(tau);
    const double put = std::exp(m) * norm_cdf(-d2) - norm_cdf(-d1);
    EXPECT_NEAR(bs_price({sigma, tau, m}) - put, 1.0 - std::exp(m), 1e-14);
}

TEST(ImpliedVol, RoundTrip) {
    for (double sigma : {0.05, 0.2, 0.8, 2.0})
        for (double tau : {30.0 / 365, 1.0, 2.0})
            for (double m : {-0.2, 0.0, 0.2}) {
                const double c = bs_price({sigma, tau, m});
                if (c - intrinsic(m) < 1e-12) continue;
                EXPECT_NEAR(implied_vol(c, tau, m), sigma, 1e-7 * std::max(1.0, sigma)) << sigma << " " << tau << " " << m;
            }
}

TEST(ImpliedVol, BoundsRejected) {
    EXPECT_THROW(implied_vol(0.0, 0.5, 0.0), DomainError);
    EXPECT_THROW(implied_vol(1.0, 0.5, 0.0), DomainError);
    EXPECT_THROW(implied_vol(intrinsic(-0.1), 0.5, -0.1), DomainError);
    EXPECT_THROW(implied_vol(0.05, 0.0, 0.0), DomainError);
    EXPECT_THROW(implied_vol(std::nan(""), 0.5, 0.0), DomainError);
}

TEST(HestonParams, Validation) {
    HestonParams p;
    EXPECT_NO_THROW(p.validate());
    for (auto mutate : {+[](HestonParams& q) { q.v0 = 0; }, +[](HestonParams& q) { q.theta = -1; },
                        +[](HestonParams& q) { q.k = 0; }, +[](HestonParams& q) { q.sigma = 0; },
                        +[](HestonParams& q) { q.rho = 1.01; }, +[](HestonParams& q) { q.S0 = std::nan(""); }}) {
        HestonParams q;
        mutate(q);
        EXPECT_THROW(q.validate(), DomainError);
    }
}

TEST(Normal, CdfPdf) {
    EXPECT_NEAR(norm_cdf(0.0), 0.5, 1e-16);
    EXPECT_NEAR(norm_cdf(1.959963984540054), 0.975, 1e-14);
    EXPECT_NEAR(norm_pdf(0.0), 0.398942280401432678, 1e-16);
}
