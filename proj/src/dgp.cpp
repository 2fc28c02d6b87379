#include "pwb/dgp.hpp"

#include <cmath>

#include "pwb/errors.hpp"

namespace pwb {

namespace {

// Per-channel latent stream ids.
constexpr std::uint64_t kAlpha = 0, kXi = 1, kEps = 2;

MatrixXd iid_normal(int n, int t, RngKey key) {
  RngStream rng(key);
  MatrixXd m(n, t);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < t; ++j) m(i, j) = rng.normal();
  return m;
}

struct ChannelLatents {
  VectorXd alpha;  // N
  VectorXd xi;     // T
  MatrixXd eps;    // N x T
};

ChannelLatents draw_latents(const DgpSpec& spec, const MatrixXd& locations,
                            RngKey channel_key) {
  ChannelLatents l;
  l.alpha = spatial_effects(locations, spec.m, spec.rho_d, spec.sigma_z2,
                            channel_key.child(kAlpha));
  l.xi = ar1_effects(spec.t, spec.rho, channel_key.child(kXi));
  l.eps = iid_normal(spec.n, spec.t, channel_key.child(kEps));
  return l;
}

// Additive/product/noise channel per the five core designs.
MatrixXd core_channel(Design design, const ChannelLatents& l, double drift) {
  const int n = static_cast<int>(l.eps.rows());
  const int t = static_cast<int>(l.eps.cols());
  MatrixXd v(n, t);
  switch (design) {
    case Design::D1:
    case Design::Hetero:
    case Design::Nonseparable:
    case Design::SpatialSweep:
      v = l.eps;
      v.colwise() += l.alpha;
      v.rowwise() += l.xi.transpose();
      return v;
    case Design::D2:
      return l.alpha * l.xi.transpose();
    case Design::D3:
      return l.eps;
    case Design::D4:
      return (l.alpha.array() + drift).matrix() * l.xi.transpose();
    case Design::D5:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < t; ++j)
          v(i, j) = (l.eps(i, j) + drift) * l.xi(j);
      return v;
  }
  return v;
}

}  // namespace

std::string to_string(Design d) {
  switch (d) {
    case Design::D1: return "d1";
    case Design::D2: return "d2";
    case Design::D3: return "d3";
    case Design::D4: return "d4";
    case Design::D5: return "d5";
    case Design::Hetero: return "hetero";
    case Design::Nonseparable: return "nonsep";
    case Design::SpatialSweep: return "spatial-sweep";
  }
  return "?";
}

Design design_from_string(const std::string& s) {
  if (s == "d1") return Design::D1;
  if (s == "d2") return Design::D2;
  if (s == "d3") return Design::D3;
  if (s == "d4") return Design::D4;
  if (s == "d5") return Design::D5;
  if (s == "hetero") return Design::Hetero;
  if (s == "nonsep") return Design::Nonseparable;
  if (s == "spatial-sweep") return Design::SpatialSweep;
  throw Error("unknown design: " + s);
}

void DgpSpec::validate() const {
  if (n < 1 || t < 1) throw Error("panel dimensions must be positive");
  if (k < 2) throw Error("need an intercept plus at least one regressor");
  if (std::abs(rho) >= 1.0) throw Error("|rho| must be below one");
  if (m <= 0.0) throw Error("spatial range must be positive");
  if (rho_d < 0.0 || rho_d >= 1.0) throw Error("rho_d must lie in [0, 1)");
  if (beta.size() != 0 && beta.size() != k)
    throw Error("beta must have K entries");
}

MatrixXd lattice_locations(int n) {
  int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  MatrixXd loc(n, 2);
  for (int i = 0; i < n; ++i) {
    loc(i, 0) = i % side;
    loc(i, 1) = i / side;
  }
  return loc;
}

VectorXd ar1_effects(int t, double rho, RngKey key) {
  RngStream rng(key);
  VectorXd xi(t);
  double s = std::sqrt(1.0 - rho * rho);
  xi(0) = rng.normal();
  for (int i = 1; i < t; ++i) xi(i) = rho * xi(i - 1) + s * rng.normal();
  return xi;
}

VectorXd spatial_effects(const MatrixXd& locations, double m, double rho_d,
                         double sigma_z2, RngKey key) {
  RngStream rng(key);
  const int n = static_cast<int>(locations.rows());
  VectorXd z(n);
  double sd = std::sqrt(sigma_z2);
  for (int i = 0; i < n; ++i) z(i) = sd * rng.normal();

  MatrixXd dist = euclidean_distances(locations);
  VectorXd alpha = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (dist(i, j) <= m) alpha(i) += std::pow(rho_d, dist(i, j)) * z(j);
  return alpha;
}

std::pair<PanelData, VectorXd> generate(const DgpSpec& spec, RngKey key,
                                        DgpLatents* latents_out) {
  spec.validate();
  const int n = spec.n, t = spec.t, k = spec.k;
  const double drift = drift_term(n);

  PanelData panel;
  panel.n_units = n;
  panel.n_periods = t;
  panel.n_regressors = k;
  panel.locations = lattice_locations(n);
  panel.x.assign(k, MatrixXd(n, t));
  panel.x[0].setOnes();

  // Channel 0 is the disturbance; channels 1..K-1 are the regressors.
  for (int c = 1; c < k; ++c) {
    ChannelLatents l = draw_latents(spec, panel.locations, key.child(c));
    panel.x[c] = core_channel(spec.design, l, drift);
  }

  ChannelLatents lu = draw_latents(spec, panel.locations, key.child(0));
  if (latents_out != nullptr) *latents_out = {lu.alpha, lu.xi, lu.eps};
  MatrixXd u;
  switch (spec.design) {
    case Design::Hetero: {
      MatrixXd base = core_channel(Design::D1, lu, drift);
      u = (1.0 + spec.het_coef * panel.x[k - 1].array()).matrix()
              .cwiseProduct(base);
      break;
    }
    case Design::Nonseparable: {
      double s = spec.nonsep_sigma;
      double scale = 1.0 / (std::sqrt(2.0 * M_PI) * s);
      u.resize(n, t);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < t; ++j) {
          double d = lu.alpha(i) - lu.xi(j);
          u(i, j) = scale * std::exp(-d * d / (s * s)) + lu.eps(i, j);
        }
      break;
    }
    default:
      u = core_channel(spec.design, lu, drift);
  }

  VectorXd beta = spec.beta.size() == k ? spec.beta : VectorXd::Ones(k);
  panel.y = u;
  for (int c = 0; c < k; ++c) panel.y += beta(c) * panel.x[c];
  return {std::move(panel), std::move(beta)};
}

std::pair<MatrixXd, MatrixXd> oracle_component_variances(const DgpSpec& spec) {
  const int n = spec.n, k = spec.k;
  double rho = spec.rho;
  double lrv_xi = (1.0 + rho) / (1.0 - rho);
  double lrv_prod = (1.0 + rho * rho) / (1.0 - rho * rho);
  double c = drift_term(n);

  MatrixXd sa = MatrixXd::Zero(k, k);
  MatrixXd sd = MatrixXd::Zero(k, k);
  switch (spec.design) {
    case Design::D1: {
      MatrixXd loc = lattice_locations(n);
      MatrixXd dist = euclidean_distances(loc);
      MatrixXd w(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          w(i, j) = dist(i, j) <= spec.m ? std::pow(spec.rho_d, dist(i, j))
                                         : 0.0;
      MatrixXd cov = spec.sigma_z2 * w * w.transpose();
      double abar = cov.sum() / n;
      double a2bar = cov.array().square().sum() / n;
      sa(0, 0) = abar;
      sd(0, 0) = lrv_xi;
      for (int i = 1; i < k; ++i) {
        sa(i, i) = a2bar;
        sd(i, i) = lrv_prod;
      }
      break;
    }
    case Design::D2:
    case Design::D3:
      break;  // both component variances vanish
    case Design::D4:
    case Design::D5:
      sd(0, 0) = c * c * lrv_xi;
      for (int i = 1; i < k; ++i) sd(i, i) = c * c * c * c * lrv_prod;
      break;
    default:
      throw Error("oracle component variances are defined only for the five core designs");
  }
  return {sa, sd};
}

}  // namespace pwb
