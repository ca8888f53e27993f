#pragma once

#include "warpspec/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace warpspec {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double h_max = std::numbers::pi / 10;
  double h_initial = 0;  ///< 0 selects a starting step automatically
  long max_steps = 50'000'000;
  /// Components are grouped into blocks of this size for the error norm; each
  /// block is scaled by its own Euclidean magnitude.
  int block = 1;
};

/// Explicit Runge-Kutta pair of order 8(5,3) (Dormand-Prince, Hairer's DOP853)
/// with adaptive step size control. `State` is a fixed or dynamic Eigen column vector.
template <class State, class Rhs>
class Dop853 {
 public:
  using Scalar = typename State::Scalar;

  Dop853(Rhs rhs, OdeOptions options = {}) : rhs_(std::move(rhs)), opt_(options) {}

  /// Advance (x, y) to x_end in either direction; on return x == x_end.
  void integrate(Scalar& x, State& y, Scalar x_end) {
    using std::abs;
    if (x == x_end) return;
    const Scalar dir = x_end > x ? Scalar(1) : Scalar(-1);
    State k1 = y;
    rhs_(x, y, k1);
    ++evaluations_;
    Scalar h = abs(h_);
    if (h == Scalar(0)) h = opt_.h_initial > 0 ? Scalar(opt_.h_initial) : initial_step(x, y, k1, dir);
    h = std::min<Scalar>(h, opt_.h_max);
    bool last_rejected = false;
    while (true) {
      const Scalar remaining = abs(x_end - x);
      if (remaining <= Scalar(0)) break;
      bool final_step = false;
      Scalar step = h;
      if (step >= remaining * Scalar(0.999999)) {
        step = remaining;
        final_step = true;
      }
      if (step < (abs(x) + Scalar(1)) * Scalar(1e-14)) {
        throw IntegrationError("step size underflow at x = " + std::to_string(double(x)));
      }
      if (++steps_ > opt_.max_steps) throw IntegrationError("step budget exhausted");
      State y_new;
      const Scalar err = attempt(x, y, k1, dir * step, y_new);
      if (!std::isfinite(double(err))) {
        h = step * Scalar(0.1);
        last_rejected = true;
        continue;
      }
      const Scalar fac11 = std::pow(double(err), 0.125);
      if (err <= Scalar(1)) {
        Scalar factor = std::clamp<Scalar>(fac11 / Scalar(0.9), Scalar(1.0 / 6.0), Scalar(1.0 / 0.333));
        Scalar h_new = step / factor;
        if (last_rejected) h_new = std::min(h_new, step);
        last_rejected = false;
        x = final_step ? x_end : x + dir * step;
        y = y_new;
        rhs_(x, y, k1);
        ++evaluations_;
        h_new = std::min<Scalar>(h_new, opt_.h_max);
        if (final_step) {
          h_ = std::max(h_new, h);
          break;
        }
        h = h_new;
      } else {
        ++rejected_;
        h = step / std::min<Scalar>(Scalar(1.0 / 0.333), fac11 / Scalar(0.9));
        last_rejected = true;
      }
    }
    h_ = std::min<Scalar>(h_, opt_.h_max);
  }

  long steps() const { return steps_; }
  long rejected() const { return rejected_; }
  long evaluations() const { return evaluations_; }
  const OdeOptions& options() const { return opt_; }

 private:
  Scalar initial_step(Scalar x, const State& y, const State& f0, Scalar dir) {
    using std::abs;
    State sk = scale(y, y);
    const Scalar dnf = (f0.array() / sk.array()).matrix().squaredNorm();
    const Scalar dny = (y.array() / sk.array()).matrix().squaredNorm();
    Scalar h = (dnf <= Scalar(1e-10) || dny <= Scalar(1e-10)) ? Scalar(1e-6) : Scalar(0.01) * std::sqrt(dny / dnf);
    h = std::min<Scalar>(h, opt_.h_max);
    State y1 = y + dir * h * f0;
    State f1 = y;
    rhs_(x + dir * h, y1, f1);
    ++evaluations_;
    const Scalar der2 = std::sqrt(((f1 - f0).array() / sk.array()).matrix().squaredNorm()) / h;
    const Scalar der12 = std::max(der2, std::sqrt(dnf));
    const Scalar h1 = der12 <= Scalar(1e-15) ? std::max<Scalar>(Scalar(1e-6), h * Scalar(1e-3))
                                             : std::pow(double(Scalar(0.01) / der12), 1.0 / 8.0);
    return std::min<Scalar>({Scalar(100) * h, h1, Scalar(opt_.h_max)});
  }

  State scale(const State& a, const State& b) const {
    State sk = a;
    const int n = static_cast<int>(a.size());
    const int block = std::max(1, opt_.block);
    for (int start = 0; start < n; start += block) {
      const int len = std::min(block, n - start);
      const Scalar m = std::max(a.segment(start, len).norm(), b.segment(start, len).norm());
      sk.segment(start, len).setConstant(Scalar(opt_.atol) + Scalar(opt_.rtol) * m);
    }
    return sk;
  }

  Scalar attempt(Scalar x, const State& y, const State& k1, Scalar h, State& y_new) {
    using std::abs;
    State k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, k8 = y, k9 = y, k10 = y, k11 = y, k12 = y;
    State yt = y + h * a21 * k1;
    rhs_(x + c2 * h, yt, k2);
    yt = y + h * (a31 * k1 + a32 * k2);
    rhs_(x + c3 * h, yt, k3);
    yt = y + h * (a41 * k1 + a43 * k3);
    rhs_(x + c4 * h, yt, k4);
    yt = y + h * (a51 * k1 + a53 * k3 + a54 * k4);
    rhs_(x + c5 * h, yt, k5);
    yt = y + h * (a61 * k1 + a64 * k4 + a65 * k5);
    rhs_(x + c6 * h, yt, k6);
    yt = y + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs_(x + c7 * h, yt, k7);
    yt = y + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
    rhs_(x + c8 * h, yt, k8);
    yt = y + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
    rhs_(x + c9 * h, yt, k9);
    yt = y + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 + a109 * k9);
    rhs_(x + c10 * h, yt, k10);
    yt = y + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 + a119 * k9 +
                  a1110 * k10);
    rhs_(x + c11 * h, yt, k11);
    yt = y + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 + a129 * k9 +
                  a1210 * k10 + a1211 * k11);
    rhs_(x + h, yt, k12);
    evaluations_ += 11;

    const State incr = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k11 + b12 * k12;
    y_new = y + h * incr;

    const State e3 = incr - bhh1 * k1 - bhh2 * k9 - bhh3 * k12;
    const State e5 = er1 * k1 + er6 * k6 + er7 * k7 + er8 * k8 + er9 * k9 + er10 * k10 + er11 * k11 + er12 * k12;
    const State sk = scale(y, y_new);
    const Scalar err5 = (e5.array() / sk.array()).matrix().squaredNorm();
    const Scalar err3 = (e3.array() / sk.array()).matrix().squaredNorm();
    Scalar denom = err5 + Scalar(0.01) * err3;
    if (denom <= Scalar(0)) denom = Scalar(1);
    if (!y_new.allFinite()) return std::numeric_limits<Scalar>::infinity();
    return abs(h) * err5 * std::sqrt(Scalar(1) / (Scalar(y.size()) * denom));
  }

  Rhs rhs_;
  OdeOptions opt_;
  Scalar h_ = 0;
  long steps_ = 0, rejected_ = 0, evaluations_ = 0;

  static constexpr double c2 = 0.526001519587677318785587544488e-01;
  static constexpr double c3 = 0.789002279381515978178381316732e-01;
  static constexpr double c4 = 0.118350341907227396726757197510e+00;
  static constexpr double c5 = 0.281649658092772603273242802490e+00;
  static constexpr double c6 = 0.333333333333333333333333333333e+00;
  static constexpr double c7 = 0.25e+00;
  static constexpr double c8 = 0.307692307692307692307692307692e+00;
  static constexpr double c9 = 0.651282051282051282051282051282e+00;
  static constexpr double c10 = 0.6e+00;
  static constexpr double c11 = 0.857142857142857142857142857142e+00;

  static constexpr double a21 = 5.26001519587677318785587544488e-2;
  static constexpr double a31 = 1.97250569845378994544595329183e-2;
  static constexpr double a32 = 5.91751709536136983633785987549e-2;
  static constexpr double a41 = 2.95875854768068491816892993775e-2;
  static constexpr double a43 = 8.87627564304205475450678981324e-2;
  static constexpr double a51 = 2.41365134159266685502369798665e-1;
  static constexpr double a53 = -8.84549479328286085344864962717e-1;
  static constexpr double a54 = 9.24834003261792003115737966543e-1;
  static constexpr double a61 = 3.7037037037037037037037037037e-2;
  static constexpr double a64 = 1.70828608729473871279604482173e-1;
  static constexpr double a65 = 1.25467687566822425016691814123e-1;
  static constexpr double a71 = 3.7109375e-2;
  static constexpr double a74 = 1.70252211019544039314978060272e-1;
  static constexpr double a75 = 6.02165389804559606850219397283e-2;
  static constexpr double a76 = -1.7578125e-2;
  static constexpr double a81 = 3.70920001185047927108779319836e-2;
  static constexpr double a84 = 1.70383925712239993810214054705e-1;
  static constexpr double a85 = 1.07262030446373284651809199168e-1;
  static constexpr double a86 = -1.53194377486244017527936158236e-2;
  static constexpr double a87 = 8.27378916381402288758473766002e-3;
  static constexpr double a91 = 6.24110958716075717114429577812e-1;
  static constexpr double a94 = -3.36089262944694129406857109825e0;
  static constexpr double a95 = -8.68219346841726006818189891453e-1;
  static constexpr double a96 = 2.75920996994467083049415600797e1;
  static constexpr double a97 = 2.01540675504778934086186788979e1;
  static constexpr double a98 = -4.34898841810699588477366255144e1;
  static constexpr double a101 = 4.77662536438264365890433908527e-1;
  static constexpr double a104 = -2.48811461997166764192642586468e0;
  static constexpr double a105 = -5.90290826836842996371446475743e-1;
  static constexpr double a106 = 2.12300514481811942347288949897e1;
  static constexpr double a107 = 1.52792336328824235832596922938e1;
  static constexpr double a108 = -3.32882109689848629194453265587e1;
  static constexpr double a109 = -2.03312017085086261358222928593e-2;
  static constexpr double a111 = -9.3714243008598732571704021658e-1;
  static constexpr double a114 = 5.18637242884406370830023853209e0;
  static constexpr double a115 = 1.09143734899672957818500254654e0;
  static constexpr double a116 = -8.14978701074692612513997267357e0;
  static constexpr double a117 = -1.85200656599969598641566180701e1;
  static constexpr double a118 = 2.27394870993505042818970056734e1;
  static constexpr double a119 = 2.49360555267965238987089396762e0;
  static constexpr double a1110 = -3.0467644718982195003823669022e0;
  static constexpr double a121 = 2.27331014751653820792359768449e0;
  static constexpr double a124 = -1.05344954667372501984066689879e1;
  static constexpr double a125 = -2.00087205822486249909675718444e0;
  static constexpr double a126 = -1.79589318631187989172765950534e1;
  static constexpr double a127 = 2.79488845294199600508499808837e1;
  static constexpr double a128 = -2.85899827713502369474065508674e0;
  static constexpr double a129 = -8.87285693353062954433549289258e0;
  static constexpr double a1210 = 1.23605671757943030647266201528e1;
  static constexpr double a1211 = 6.43392746015763530355970484046e-1;

  static constexpr double b1 = 5.42937341165687622380535766363e-2;
  static constexpr double b6 = 4.45031289275240888144113950566e0;
  static constexpr double b7 = 1.89151789931450038304281599044e0;
  static constexpr double b8 = -5.8012039600105847814672114227e0;
  static constexpr double b9 = 3.1116436695781989440891606237e-1;
  static constexpr double b10 = -1.52160949662516078556178806805e-1;
  static constexpr double b11 = 2.01365400804030348374776537501e-1;
  static constexpr double b12 = 4.47106157277725905176885569043e-2;

  static constexpr double bhh1 = 0.244094488188976377952755905512e+00;
  static constexpr double bhh2 = 0.733846688281611857341361741547e+00;
  static constexpr double bhh3 = 0.220588235294117647058823529412e-01;

  static constexpr double er1 = 0.1312004499419488073250102996e-01;
  static constexpr double er6 = -0.1225156446376204440720569753e+01;
  static constexpr double er7 = -0.4957589496572501915214079952e+00;
  static constexpr double er8 = 0.1664377182454986536961530415e+01;
  static constexpr double er9 = -0.3503288487499736816886487290e+00;
  static constexpr double er10 = 0.3341791187130174790297318841e+00;
  static constexpr double er11 = 0.8192320648511571246570742613e-01;
  static constexpr double er12 = -0.2235530786388629525884427845e-01;
};

template <class State, class Rhs>
Dop853<State, Rhs> make_dop853(Rhs rhs, OdeOptions options = {}) {
  return Dop853<State, Rhs>(std::move(rhs), options);
}

}  // namespace warpspec
