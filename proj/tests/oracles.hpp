#pragma once

// Reference values for the default protocol constants (G=32, m=3), computed
// with an independent arbitrary-precision evaluation (50 decimal digits) of
// the model relations and frozen here. Tolerances in the tests that consume
// these account for the library's own bisection tolerance (|f(p)-n| <= 1e-9).

namespace oracle {

// tau(p) closed form.
inline constexpr double kTauAt0 = 2.0 / 33.0;
inline constexpr double kTauAt025 = 0.042553191489361702;
inline constexpr double kTauLimitAtHalf = 0.024691358024691358;  // 4/162
inline constexpr double kTauAt075 = 0.013605442176870748;

// f(p) = 1 + log(1-p)/log(1-tau(p)).
inline constexpr double kUsersAtFloor = 1.0015997191023875;  // f(1e-4)
inline constexpr double kUsersAt01 = 2.8943151987819716;
inline constexpr double kUsersAt03 = 10.061227029827932;
inline constexpr double kUsersAt05 = 28.724443105597695;
inline constexpr double kUsersAt075 = 102.19790581414435;
inline constexpr double kUsersAtCeil = 883.31080634491308;  // f(0.999)

// h(n): the p solving f(p) = n.
struct UsersCollision {
    double n;
    double p;
};
inline constexpr UsersCollision kCollisionTable[] = {
    {2.0, 0.057048930589302588},  {3.0, 0.10464666563613814},
    {5.0, 0.17917895210755570},   {6.0, 0.20902411074883954},
    {9.0, 0.27975335392000062},   {10.0, 0.29888404602380686},
    {12.0, 0.33253643505936657},  {20.0, 0.42955512859167055},
    {21.0, 0.43898224471649264},  {25.0, 0.47284865355701424},
    {30.0, 0.50852303627363091},  {34.0, 0.53314110338353274},
    {40.0, 0.56522797403183771},  {50.0, 0.60942668818552560},
};

// Analytic slope dh/dn = 1/f'(h(n)), exact to the digits shown. The
// central-difference approximation at delta=1e-3 agrees to ~7 digits.
struct SlopePoint {
    double n;
    double slope;
};
inline constexpr SlopePoint kSlopeTable[] = {
    {2.0, 0.051960886952852850},
    {5.0, 0.031926010349143077},
    {10.0, 0.018275690526420285},
    {25.0, 0.0077992961132879230},
    {40.0, 0.0049444112087297178},
};

// One hand-computed filter update from n_est=10, V=1, Q=0, k_all=100,
// p_hat = h(10) + 0.05, with h' taken as the delta=1e-3 central difference
// (the same stencil the library uses).
inline constexpr double kKfStepSlope = 0.018275690572146851;
inline constexpr double kKfStepGain = 7.5223319816729735;
inline constexpr double kKfStepNext = 10.376116599083649;
inline constexpr double kKfStepVariance = 0.86252418832198050;
inline constexpr double kKfStepStat = 1.0290078987681890;

}  // namespace oracle
