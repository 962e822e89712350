#pragma once

#include <string>

namespace mmhedge {

double norm_cdf(double x);
double norm_pdf(double x);

struct BsQuote {
    double sigma = 0.0;
    double tau = 0.0;
    double m = 0.0;
};

// Zero-rate Black-Scholes in spot numeraire: c~ = Phi(d1) - e^m Phi(d1 - sigma sqrt(tau)).
double bs_d1(const BsQuote& q);
double bs_price(const BsQuote& q);
double bs_delta(const BsQuote& q);
// Currency vega S sqrt(tau) phi(d1); bs_vega_normalized drops the S.
double bs_vega(const BsQuote& q, double spot);
double bs_vega_normalized(const BsQuote& q);
// Normalized value and spot delta of the cash-or-nothing digital 1{S_T > K}.
double bs_digital_price(const BsQuote& q);
double bs_digital_delta(const BsQuote& q, double spot);

// Inverts bs_price for sigma. Throws DomainError at or outside the bounds
// (max(1 - e^m, 0), 1).
double implied_vol(double c_tilde, double tau, double m);

struct HestonParams {
    double S0 = 1.0;
    double v0 = 0.04;
    double theta = 0.04;
    double k = 2.0;
    double sigma = 0.5;  // vol of vol
    double rho = -0.7;

    // Throws DomainError when any admissibility bound fails.
    void validate() const;
    std::string str() const;
};

}  // namespace mmhedge
