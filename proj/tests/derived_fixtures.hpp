#pragma once
// Generated by tests/oracle/derive_fixtures.py (scipy/mpmath); frozen.

namespace fixtures {
constexpr double pois_kappa_c02 = 0.07071377282418147;
constexpr double pois_M2_c02 = 0.24414062499999994;
constexpr double gamma_env_score_sup = 3.28125;
constexpr double gamma_env_pi_sup = 2.7893913175298823e-06;
constexpr double gamma_env_invpi_sup = 62746022.59266821;
constexpr double gamma_tail_moment_p1 = 3.9666662517463345;
constexpr double gamma_tail_moment_p2 = 15.745555273233267;
constexpr double pois_post_mean = 2.0166666666666666;
constexpr double pois_post_var = 0.3361111111111111;
constexpr double pois_map = 1.8499999999999999;
constexpr double pois_J_bar = 1.0810810810810811;
constexpr double pois_quad_tv = 0.07986516697175305;
constexpr double pois_quad_w1 = 0.28867513459481303;
constexpr double pois_fisher_r15 = 0.09005731517194406;
constexpr double weib_mle = 2.0;
constexpr double weib_map = 2.2857142857142856;
constexpr double weib_post_mean = 3.2;
constexpr double weib_post_var = 2.56;
constexpr double weib_J_bar = 0.4466145833333335;
constexpr double weib_quad_tv = 0.23943572898220264;
constexpr double weib_quad_w1 = 1.5835893097772595;
constexpr double invgamma_tail_moment_p1 = 3.0456065637396876;
constexpr double invgamma_tail_moment_p2 = 33.98401367055538;
constexpr double logistic_M2_two_rows = 0.4330127018922193;
constexpr double logit2_L_value = -24.812931371727966;
constexpr double logit2_L_g0 = 1.7902997223448178;
constexpr double logit2_L_g1 = 8.436998872018611;
constexpr double logit2_L_h00 = -5.67713372992133;
constexpr double logit2_L_h01 = -0.3563743908737984;
constexpr double logit2_L_h11 = -4.000192511967984;
constexpr double logit2_P_value = -2.2440909774279545;
constexpr double logit2_P_g0 = -0.3930131004366812;
constexpr double logit2_P_g1 = 0.9170305676855894;
constexpr double logit2_P_h00 = -1.2585572357506531;
constexpr double logit2_P_h01 = -0.12013500886710779;
constexpr double logit2_P_h11 = -1.0297286474323526;
constexpr double logit2_tprior_logpdf_mode = -1.8378770664093453;
constexpr double logit2_post_mean0 = 0.6922382653365755;
constexpr double logit2_post_mean1 = 1.1194420449690357;
constexpr double logit2_post_var0 = 0.22382563882073087;
constexpr double logit2_post_var1 = 0.30283304274357886;
constexpr double logit2_post_cov01 = 0.07107101802287788;
constexpr double credible_q975 = 1.959963984540054;
constexpr double credible_q980 = 2.0537489106318225;
constexpr double logit2_X[] = {-0.21118912055729136, -0.5177334709845255, 0.1495958369624623, -1.7898968436779759, 0.2844522535691842, -0.3216956064836901, -0.726050324449302, 0.09853727513129668, -1.9514738484064804, -0.15841288562715672, -0.7312848653804448, 0.40969535789355127, 0.44244173776631784, -0.9278626907702291, -0.9331679527718499, -1.4700371639889616, -0.7876892940867893, 0.3194143920162998, 0.8572703661247674, 0.22879972296310866, 0.03479925265515608, -0.8674471104434567, 0.19577021284431775, -0.8156895315256701, 0.23962888489868106, -0.20259332624012352, 0.8560181034854327, 0.2024703525539789, 1.3688252896097017, -0.4082144474715901, 0.7559450824466323, 0.22516072407457527, 1.6965558201068938, -1.9620539547190585, 0.8742582951813314, -1.0236516100709405, -0.8686467389750054, -0.018363115062379937, -1.5105593611064696, -1.1945810265785586, -0.5055418749192547, -0.32248383162699573, -1.9036789280897755, -0.8736312382373598, -0.14591356690623353, -0.13192758477062216, -0.6623081572224156, -0.004088789106296888, -0.5133744270857837, 1.173498778229933, -0.8091351820079116, 0.05910379879897925, -0.4895950062802856, 0.8545624531310859, -0.9715485115688727, 0.8766026328650387, -1.1953017929996643, -1.366996897121547, -0.5484695736103665, 0.09212685627119044};
constexpr double logit2_Y[] = {1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0};
}  // namespace fixtures
