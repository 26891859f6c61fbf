#include "lumen/robot.hpp"

#include <algorithm>
#include <cmath>

#include "lumen/errors.hpp"

namespace lumen::robot {

namespace {

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

void fk_into(const RobotConfig& config, double link_length, std::vector<Vec2>& positions,
             std::vector<double>& headings) {
  const int n = config.n_inserted();
  positions.resize(n + 1);
  headings.resize(n);
  positions[0] = config.base_pose.position;
  double phi = config.base_pose.heading;
  for (int i = 0; i < n; ++i) {
    phi += config.angles[i];
    headings[i] = phi;
    positions[i + 1] = positions[i] + link_length * unit_from_angle(phi);
  }
}

// Energy given precomputed joint positions; fills displacements[j] with the
// penetration displacement of joint j+1 (zero when inside the lumen).
double energy_scalar(const std::vector<Vec2>& positions, const std::vector<double>& angles,
                     const geom::PreparedLumen& lumen, const RobotParams& params,
                     std::vector<Vec2>* displacements = nullptr) {
  double spring = 0.0;
  for (const double a : angles) spring += a * a;
  spring *= 0.5 * params.k1;

  if (displacements) displacements->assign(positions.size() - 1, Vec2{});
  double contact = 0.0;
  for (std::size_t j = 1; j < positions.size(); ++j) {
    const geom::PenetrationResult pen = lumen.penetration(positions[j]);
    if (pen.depth > 0.0) {
      contact += pen.displacement.norm_sq();
      if (displacements) (*displacements)[j - 1] = pen.displacement;
    }
  }
  contact *= 0.5 * params.k2;
  return spring + contact;
}

// dE/dtheta_i for i = 1..n-1 (the commanded tip is clamped). Uses suffix sums
// over the contact displacements so the whole gradient costs O(n):
//   dE/dtheta_i = k1 theta_i
//     + k2 L sum_{m>=i} [cos(phi_m) Sy[m] - sin(phi_m) Sx[m]]
// where Sx[m], Sy[m] sum the displacements of penetrating joints j >= m.
void gradient_into(const RobotConfig& config, const std::vector<double>& headings,
                   const std::vector<Vec2>& displacements, const RobotParams& params,
                   std::vector<double>& grad) {
  const int n = config.n_inserted();
  const int n_relax = std::max(0, n - 1);
  grad.assign(n_relax, 0.0);
  if (n_relax == 0) return;

  double sx = 0.0;
  double sy = 0.0;
  double suffix = 0.0;
  // Walk from the tip toward the base, accumulating the suffix sums.
  for (int m = n - 1; m >= 0; --m) {
    sx += displacements[m].x;
    sy += displacements[m].y;
    suffix += params.link_length *
              (std::cos(headings[m]) * sy - std::sin(headings[m]) * sx);
    if (m < n_relax) {
      grad[m] = params.k1 * config.angles[m] + params.k2 * suffix;
    }
  }
}

// Gauss-Newton Hessian of the contact energy over the relaxable angles,
// row-major n_relax x n_relax. The gradient of one contact term is exact
// (grad of 0.5 dist^2 is the displacement itself), and its curvature is
// concentrated along the contact normal u_j = displacement / depth: moving
// a joint tangentially slides it along the wall at no energy cost for a
// straight wall, so the per-contact model is the rank-one
//   k2 (u_j . dx_j/dtheta)^T (u_j . dx_j/dtheta),
// which is exact for segment walls and ignores only the small depth/radius
// tangential term of arc walls (the line search absorbs that).
// With dx_j/dtheta_i = perp(x_j - x_pivot(i)), expanding
//   u_j.perp(x_j - p) = alpha_j - u_j.perp(p),  alpha_j = u_j.perp(x_j),
// lets one tip-to-base pass accumulate suffix sums (S1 = sum alpha^2,
// S2 = sum alpha u, S3 = sum u u^T) so the whole matrix assembles in
// O(n^2):
//   H[i][l] = k1 [i == l]
//     + k2 (S1 - S2.(perp(p_i) + perp(p_l)) + perp(p_i)^T S3 perp(p_l))
// over penetrating joints j > max(i, l). The spring term contributes k1 I,
// so H is symmetric positive definite, Cholesky always succeeds, and the
// Newton direction is always a descent direction.
void hessian_into(const std::vector<Vec2>& positions, const std::vector<Vec2>& displacements,
                  const RobotParams& params, int n_relax, std::vector<double>& hess) {
  const int n = static_cast<int>(displacements.size());
  hess.assign(static_cast<std::size_t>(n_relax) * n_relax, 0.0);
  double s1 = 0.0;  // sum alpha_j^2
  Vec2 s2{};        // sum alpha_j u_j
  double sxx = 0.0, sxy = 0.0, syy = 0.0;  // sum u_j u_j^T
  for (int l = n - 1; l >= 0; --l) {
    const Vec2 disp = displacements[l];
    if (disp.x != 0.0 || disp.y != 0.0) {
      const Vec2 u = disp / disp.norm();
      const double alpha = dot(u, positions[l + 1].perp());
      s1 += alpha * alpha;
      s2 += alpha * u;
      sxx += u.x * u.x;
      sxy += u.x * u.y;
      syy += u.y * u.y;
    }
    if (l >= n_relax) continue;
    const Vec2 ql = positions[l].perp();
    const Vec2 s3_ql{sxx * ql.x + sxy * ql.y, sxy * ql.x + syy * ql.y};
    for (int i = 0; i <= l; ++i) {
      const Vec2 qi = positions[i].perp();
      const double v = params.k2 * (s1 - dot(s2, qi + ql) + dot(qi, s3_ql));
      hess[static_cast<std::size_t>(i) * n_relax + l] = v;
      hess[static_cast<std::size_t>(l) * n_relax + i] = v;
    }
    hess[static_cast<std::size_t>(l) * n_relax + l] += params.k1;
  }
}

// Solves hess * x = rhs in place via Cholesky; hess is overwritten with its
// lower factor and rhs with the solution. Returns false if a pivot is not
// strictly positive (cannot happen for the SPD Gauss-Newton matrix above,
// kept as a belt-and-braces guard against numerical degeneracy).
bool cholesky_solve(std::vector<double>& hess, std::vector<double>& rhs, int n) {
  for (int j = 0; j < n; ++j) {
    double d = hess[static_cast<std::size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) {
      const double v = hess[static_cast<std::size_t>(j) * n + k];
      d -= v * v;
    }
    if (!(d > 0.0)) return false;
    const double root = std::sqrt(d);
    hess[static_cast<std::size_t>(j) * n + j] = root;
    for (int i = j + 1; i < n; ++i) {
      double v = hess[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k) {
        v -= hess[static_cast<std::size_t>(i) * n + k] * hess[static_cast<std::size_t>(j) * n + k];
      }
      hess[static_cast<std::size_t>(i) * n + j] = v / root;
    }
  }
  for (int i = 0; i < n; ++i) {  // forward substitution L y = rhs
    double v = rhs[i];
    for (int k = 0; k < i; ++k) v -= hess[static_cast<std::size_t>(i) * n + k] * rhs[k];
    rhs[i] = v / hess[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {  // back substitution L^T x = y
    double v = rhs[i];
    for (int k = i + 1; k < n; ++k) v -= hess[static_cast<std::size_t>(k) * n + i] * rhs[k];
    rhs[i] = v / hess[static_cast<std::size_t>(i) * n + i];
  }
  return true;
}

}  // namespace

void RobotParams::validate() const {
  require(std::isfinite(k1) && k1 > 0.0, "k1", "must be > 0");
  require(std::isfinite(k2) && k2 > 0.0, "k2", "must be > 0");
  require(std::isfinite(link_length) && link_length > 0.0, "link_length", "must be > 0");
  require(max_links >= 1, "max_links", "must be >= 1");
  require(std::isfinite(bend_step) && bend_step > 0.0, "bend_step", "must be > 0");
  require(std::isfinite(tip_limit) && tip_limit > 0.0, "tip_limit", "must be > 0");
  require(bend_step <= tip_limit, "bend_step", "must be <= tip_limit");
  require(std::isfinite(relax_step) && relax_step > 0.0, "relax_step", "must be > 0");
  require(std::isfinite(relax_tol) && relax_tol > 0.0, "relax_tol", "must be > 0");
  require(relax_max_iters >= 1, "relax_max_iters", "must be >= 1");
  require(relax_cadence >= 1, "relax_cadence", "must be >= 1");
}

RobotConfig initial_config(const Pose2& entry) {
  RobotConfig config;
  config.base_pose = entry;
  config.angles = {0.0};
  config.tip_command = 0.0;
  return config;
}

std::vector<Vec2> forward_kinematics(const RobotConfig& config, double link_length) {
  std::vector<Vec2> positions;
  std::vector<double> headings;
  fk_into(config, link_length, positions, headings);
  return positions;
}

double tip_heading(const RobotConfig& config) {
  double phi = config.base_pose.heading;
  for (const double a : config.angles) phi += a;
  return phi;
}

EnergyReport energy(const RobotConfig& config, const geom::LumenMap& lumen,
                    const RobotParams& params) {
  const geom::PreparedLumen prepared(lumen);
  EnergyReport report;
  for (const double a : config.angles) report.spring_part += a * a;
  report.spring_part *= 0.5 * params.k1;

  const std::vector<Vec2> positions = forward_kinematics(config, params.link_length);
  for (std::size_t j = 1; j < positions.size(); ++j) {
    const geom::PenetrationResult pen = prepared.penetration(positions[j]);
    if (pen.depth > 0.0) {
      report.contact_part += pen.displacement.norm_sq();
      report.contacts.push_back({static_cast<int>(j), pen});
    }
  }
  report.contact_part *= 0.5 * params.k2;
  report.total = report.spring_part + report.contact_part;
  return report;
}

std::vector<double> energy_gradient(const RobotConfig& config, const geom::LumenMap& lumen,
                                    const RobotParams& params) {
  const geom::PreparedLumen prepared(lumen);
  std::vector<Vec2> positions;
  std::vector<double> headings;
  fk_into(config, params.link_length, positions, headings);
  std::vector<Vec2> displacements;
  energy_scalar(positions, config.angles, prepared, params, &displacements);
  std::vector<double> grad;
  gradient_into(config, headings, displacements, params, grad);
  return grad;
}

namespace {

RelaxResult relax_prepared(const RobotConfig& config, const geom::PreparedLumen& lumen,
                           const RobotParams& params, std::vector<double>* energy_trace,
                           double* step_io = nullptr) {
  RobotConfig current = config;
  const int n = current.n_inserted();
  const int n_relax = std::max(0, n - 1);

  std::vector<Vec2> positions;
  std::vector<double> headings;
  std::vector<Vec2> displacements;
  std::vector<double> grad;
  std::vector<double> hess;
  std::vector<double> dir;
  RobotConfig candidate = current;

  fk_into(current, params.link_length, positions, headings);
  double e = energy_scalar(positions, current.angles, lumen, params, &displacements);
  if (energy_trace) {
    energy_trace->clear();
    energy_trace->push_back(e);
  }
  if (n_relax == 0) return {current, 0, e};

  // The contact energy makes the landscape stiff (curvature up to
  // ~k2 * (chain length)^2 at loaded proximal joints) while the springs are
  // soft (k1), and a wall contact couples every joint between it and the
  // base, so any per-joint step -- uniform or diagonally scaled -- zigzags
  // for thousands of iterations. The chain is short, so each iterate takes
  // a damped Newton step on the frozen-contact model instead: assemble the
  // Gauss-Newton Hessian, solve H dir = grad by Cholesky, and walk along
  // -dir starting at the natural step 1. Backtracking halving guards every
  // iterate against model error and contact-set changes, so the accepted
  // energies are non-increasing regardless of the model quality, and
  // params.relax_step only seeds the fallback steepest-descent scaling in
  // the (numerically unreachable) event the factorization fails.
  double accepted_step = params.relax_step;
  int iters = 0;
  while (iters < params.relax_max_iters) {
    ++iters;
    gradient_into(current, headings, displacements, params, grad);
    double grad_sq = 0.0;
    for (const double g : grad) grad_sq += g * g;
    if (grad_sq == 0.0) break;  // exact stationary point: already settled

    hessian_into(positions, displacements, params, n_relax, hess);
    dir = grad;
    double step = 1.0;
    if (!cholesky_solve(hess, dir, n_relax)) {
      dir = grad;
      step = params.relax_step;
    }

    // Backtrack until the move does not increase the energy.
    double e_candidate = e;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving) {
      for (int i = 0; i < n_relax; ++i) {
        candidate.angles[i] = current.angles[i] - step * dir[i];
      }
      fk_into(candidate, params.link_length, positions, headings);
      e_candidate = energy_scalar(positions, candidate.angles, lumen, params, &displacements);
      if (e_candidate <= e) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      // No step size descends; the energy is already at a plateau.
      break;
    }

    const double delta = e - e_candidate;
    current.angles.swap(candidate.angles);
    accepted_step = step;
    e = e_candidate;
    if (energy_trace) energy_trace->push_back(e);
    if (delta < params.relax_tol) break;
  }

  if (step_io) *step_io = accepted_step;
  return {current, iters, e};
}

}  // namespace

RelaxResult relax(const RobotConfig& config, const geom::LumenMap& lumen,
                  const RobotParams& params, std::vector<double>* energy_trace) {
  return relax_prepared(config, geom::PreparedLumen(lumen), params, energy_trace);
}

ActionResult apply_action(const RobotConfig& config, Action action,
                          const geom::LumenMap& lumen, const RobotParams& params,
                          long action_counter, double* relax_step_hint) {
  ActionResult result;
  result.config = config;

  switch (action) {
    case Action::BendCw:
    case Action::BendCcw: {
      const double delta = action == Action::BendCcw ? params.bend_step : -params.bend_step;
      result.config.tip_command =
          std::clamp(config.tip_command + delta, -params.tip_limit, params.tip_limit);
      result.config.angles.back() = result.config.tip_command;
      break;
    }
    case Action::Advance: {
      // Pushing at the held proximal end feeds one more link into the lumen;
      // the wall-constrained body keeps its settled shape while the tip gains
      // one link along the commanded bend. In angle space: the old tip angle
      // becomes an ordinary relaxable joint and a new distal link is activated
      // at tip_command, so a bent tip leads the body into a branch. Once every
      // link is active, advancing no longer changes the kinematics.
      if (config.n_inserted() >= params.max_links) {
        result.advance_exhausted = true;
      } else {
        result.config.angles.push_back(config.tip_command);
      }
      break;
    }
  }

  if (action_counter % params.relax_cadence == 0) {
    RelaxResult r = relax_prepared(result.config, geom::PreparedLumen(lumen), params,
                                   nullptr, relax_step_hint);
    result.config = std::move(r.config);
    result.relaxed = true;
    result.relax_iterations = r.iterations;
  }
  return result;
}

}  // namespace lumen::robot
