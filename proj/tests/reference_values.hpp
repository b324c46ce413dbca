#pragma once

// Frozen output of tests/oracles/reference_values.py (50-digit mpmath, defining
// sums and direct minimisation only).
namespace ref {

inline constexpr double pair_w = 3.158511013041858578;             // (+-0.3), d = (1, 1)
inline constexpr double pair_kmin_b05 = 0.020440416294184585242;
inline constexpr double pair_wmicro_b05 = 0.81006816955464922974;
inline constexpr double pair_wmicro_b1 = 3.2096120537773200411;
inline constexpr double mixed_wmicro_b06 = 2.5399847641281746045;  // (0.2, -0.4), d = (1, 2)
inline constexpr double triple_wmicro_b07 = 1.1214435386486397904; // (0.1+0.5i, -0.6+0.2i, 0.3-0.7i), d = (2, -1, 3)
inline constexpr double n2_p1q2_s = 0.898359592164963523;         // b^2 = 1/2, degree 1 at +s
inline constexpr double n2_p1q2_t = 0.67376969412372264225;       // degree 2 at -t
inline constexpr double n2_p1q2_value = -1.7052383859777654603;
inline constexpr double pp_s0_half = 0.80910671157022121429;      // (7/3)^(-1/4)

}  // namespace ref
