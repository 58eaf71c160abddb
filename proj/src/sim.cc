// Copyright 2026 The GraspStab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "graspstab/sim.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "graspstab/stability.h"

namespace graspstab {
namespace {

constexpr int kRootDofs = 3;
constexpr int kNormalPresolveIterations = 200;

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

Quat IntegrateOrientation(const Quat& q, const Vec3& w, double dt) {
  const Vec3 phi = w * dt;
  const double angle = phi.norm();
  Quat dq = Quat::Identity();
  if (angle > 0) dq = Quat(Eigen::AngleAxisd(angle, phi / angle));
  return (dq * q).normalized();
}

struct SolverContact {
  ContactPoint point;
  Vec3 t1, t2;
  double target = 0;   // normal velocity bound
  double push = 0;     // split-impulse normal velocity target
};

}  // namespace

void SimConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidInput(std::string("sim config: ") + what);
  };
  require(dt > 0 && std::isfinite(dt), "dt must be positive");
  require(steps >= 1, "steps must be at least 1");
  require(gravity.allFinite(), "gravity must be finite");
  require(friction >= 0, "friction must be non-negative");
  require(restitution >= 0 && restitution <= 1, "restitution must lie in [0, 1]");
  require(restitution_threshold >= 0, "restitution threshold must be >= 0");
  require(pd_kp >= 0 && root_kp_linear >= 0 && root_kp_angular >= 0,
          "PD gains must be non-negative");
  require(torque_clamp > 0 && root_force_clamp > 0 && root_torque_clamp > 0,
          "clamps must be positive");
  require(solver_iterations >= 1, "solver iterations must be at least 1");
  require(baumgarte >= 0 && baumgarte <= 1, "baumgarte must lie in [0, 1]");
  require(slop >= 0, "slop must be non-negative");
  require(reset_position > 0 && reset_angle > 0,
          "reset thresholds must be positive");
  require(link_density > 0, "link density must be positive");
  require(max_initial_penetration > 0, "penetration bound must be positive");
  require(divergence_speed > 0, "divergence speed must be positive");
}

SimScene BuildScene(const std::optional<HandSetup>& hand,
                    const std::optional<ObjectSetup>& object,
                    const Targets& targets, const SimConfig& cfg,
                    std::vector<StaticBody> statics) {
  cfg.Validate();
  SimScene s;
  s.statics_ = std::move(statics);
  s.q_ = VecX::Zero(0);
  s.qd_ = VecX::Zero(0);
  if (hand) {
    const HandTemplate& tmpl = hand->tmpl;
    const PoseParams pose0 = ToEulerLayout(hand->theta, hand->theta.layout);
    s.layout_ = pose0.layout;
    const PoseParams target = ToEulerLayout(targets.theta, s.layout_);
    const auto radii = ShapedRadii(tmpl, hand->beta);

    auto add_joint = [&](bool revolute, int parent, const Mat3& rot,
                         const Vec3& pos, int axis) {
      s.joints_.push_back({revolute, parent, rot, pos, axis});
      return static_cast<int>(s.joints_.size()) - 1;
    };
    int last = add_joint(false, -1, Mat3::Identity(),
                         tmpl.link(0).rest.center(), 0);
    last = add_joint(false, last, Mat3::Identity(), Vec3::Zero(), 1);
    last = add_joint(false, last, Mat3::Identity(), Vec3::Zero(), 2);
    last = add_joint(true, last, tmpl.link(0).rest.rotation(), Vec3::Zero(), 0);
    last = add_joint(true, last, Mat3::Identity(), Vec3::Zero(), 1);
    last = add_joint(true, last, Mat3::Identity(), Vec3::Zero(), 2);
    s.links_[0].frame = last;
    for (int i = 1; i < kNumLinks; ++i) {
      const LinkTemplate& l = tmpl.link(i);
      const int p = l.parent;
      const Mat3 rel =
          tmpl.link(p).rest.rotation().transpose() * l.rest.rotation();
      // Anchor relative to the parent's joint frame (parents come first).
      const Vec3 anchor =
          s.links_[p].offset + radii[p].cwiseProduct(l.parent_anchor);
      std::vector<int> axes;
      if (s.layout_ == DofLayout::kFull) {
        axes = {0, 1, 2};
      } else if ((i - 1) % 3 == 0) {
        axes = {1, 2};
      } else {
        axes = {2};
      }
      int parent = s.links_[p].frame;
      for (std::size_t k = 0; k < axes.size(); ++k) {
        parent = add_joint(true, parent, k == 0 ? rel : Mat3::Identity(),
                           k == 0 ? anchor : Vec3::Zero(), axes[k]);
      }
      s.links_[i].frame = parent;
      s.links_[i].offset = -radii[i].cwiseProduct(l.child_anchor);
    }
    const int n = static_cast<int>(s.joints_.size());
    if (n != kRootDofs + DofCount(s.layout_)) {
      throw NumericalError("hand multibody: DoF count mismatch");
    }
    for (int i = 0; i < kNumLinks; ++i) {
      SimScene::Link& link = s.links_[i];
      link.radii = radii[i];
      const RigidBodyProps mp = EllipsoidMassProps(
          Ellipsoid(Vec3::Zero(), radii[i], Vec3::Zero()), cfg.link_density);
      link.mass = mp.mass;
      link.inertia = mp.inertia;
      link.shape = ConvexShape::MakeEllipsoid(radii[i]);
      for (int j = link.frame; j >= 0; j = s.joints_[j].parent) {
        link.chain.push_back(j);
      }
      std::reverse(link.chain.begin(), link.chain.end());
    }
    s.q_.resize(n);
    s.q_.head<3>() = hand->root_t;
    s.q_target_.resize(n);
    s.q_target_.head<3>() = targets.root_t;
    for (int i = 0; i < DofCount(s.layout_); ++i) {
      s.q_[kRootDofs + i] = pose0.values[i];
      s.q_target_[kRootDofs + i] = target.values[i];
    }
    if (!s.q_.allFinite() || !s.q_target_.allFinite()) {
      throw InvalidInput("hand: non-finite pose or root translation");
    }
    s.qd_ = VecX::Zero(n);

    s.kp_.resize(n);
    s.kd_.resize(n);
    s.clamp_.resize(n);
    const MatX h = s.MassMatrix(s.ForwardKinematics(s.q_));
    for (int i = 0; i < n; ++i) {
      bool finger = i >= 2 * kRootDofs;
      if (i < kRootDofs) {
        s.kp_[i] = cfg.root_kp_linear;
        s.clamp_[i] = cfg.root_force_clamp;
      } else if (!finger) {
        s.kp_[i] = cfg.root_kp_angular;
        s.clamp_[i] = cfg.root_torque_clamp;
      } else {
        s.kp_[i] = cfg.pd_kp;
        s.clamp_[i] = cfg.torque_clamp;
      }
      s.kd_[i] = (finger && cfg.pd_kd >= 0)
                     ? cfg.pd_kd
                     : 2.0 * std::sqrt(s.kp_[i] * h(i, i));
    }
  }

  if (object) {
    if (!(object->props.mass > 0)) {
      throw InvalidInput("object: mass must be positive");
    }
    s.has_object_ = true;
    s.props_ = object->props;
    s.com_local_ = object->props.com;
    std::vector<Vec3> local;
    local.reserve(object->mesh.vertices.size());
    for (const Vec3& v : object->mesh.vertices) local.push_back(v - s.com_local_);
    s.object_shape_ = ConvexShape::MakeHull(local);
    s.orient_ = object->orientation.normalized();
    s.com_pos_ = object->position + s.orient_ * s.com_local_;
    s.p_initial_ = object->position;
    s.q_initial_ = s.orient_;
  }

  if (s.has_hand() && s.has_object_) {
    const SimScene::Kinematics k = s.ForwardKinematics(s.q_);
    const Pose obj_pose{s.orient_.toRotationMatrix(), s.com_pos_};
    for (int i = 0; i < kNumLinks; ++i) {
      const Pose lp{k.link_rot[i], k.link_pos[i]};
      const auto m = DetectContacts(s.links_[i].shape, lp, s.object_shape_,
                                    obj_pose, 0.0, i + 1, kObjectBody);
      if (m && m->MaxDepth() > cfg.max_initial_penetration) {
        throw InvalidInput("initial hand-object penetration of link " +
                           std::to_string(i) + " is " +
                           std::to_string(m->MaxDepth() * 1e3) +
                           " mm, beyond the recoverable bound");
      }
    }
  }
  return s;
}

SimScene::Kinematics SimScene::ForwardKinematics(const VecX& q) const {
  Kinematics k;
  const int n = static_cast<int>(joints_.size());
  k.rot.resize(n);
  k.pos.resize(n);
  k.axis.resize(n);
  for (int j = 0; j < n; ++j) {
    const Joint& jt = joints_[j];
    Mat3 r = jt.offset_rot;
    Vec3 p = jt.offset_pos;
    if (jt.parent >= 0) {
      r = k.rot[jt.parent] * jt.offset_rot;
      p = k.pos[jt.parent] + k.rot[jt.parent] * jt.offset_pos;
    }
    const Vec3 axis = r.col(jt.axis);
    k.axis[j] = axis;
    if (jt.revolute) {
      k.rot[j] = r * Eigen::AngleAxisd(q[j], Vec3::Unit(jt.axis)).toRotationMatrix();
      k.pos[j] = p;
    } else {
      k.rot[j] = r;
      k.pos[j] = p + axis * q[j];
    }
  }
  if (n > 0) {
    for (int i = 0; i < kNumLinks; ++i) {
      const Link& l = links_[i];
      k.link_rot[i] = k.rot[l.frame];
      k.link_pos[i] = k.pos[l.frame] + k.rot[l.frame] * l.offset;
    }
  }
  return k;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> SimScene::PointJacobian(
    const Kinematics& k, int link, const Vec3& x) const {
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac =
      Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, q_.size());
  for (int j : links_[link].chain) {
    jac.col(j) = joints_[j].revolute ? Vec3(k.axis[j].cross(x - k.pos[j]))
                                     : k.axis[j];
  }
  return jac;
}

MatX SimScene::MassMatrix(const Kinematics& k) const {
  const int n = static_cast<int>(q_.size());
  MatX h = MatX::Zero(n, n);
  for (int i = 0; i < kNumLinks; ++i) {
    const Link& l = links_[i];
    const int m = static_cast<int>(l.chain.size());
    Eigen::Matrix<double, 3, Eigen::Dynamic> jv(3, m), jw(3, m);
    for (int c = 0; c < m; ++c) {
      const int j = l.chain[c];
      if (joints_[j].revolute) {
        jv.col(c) = k.axis[j].cross(k.link_pos[i] - k.pos[j]);
        jw.col(c) = k.axis[j];
      } else {
        jv.col(c) = k.axis[j];
        jw.col(c).setZero();
      }
    }
    const Mat3 iw = k.link_rot[i] * l.inertia * k.link_rot[i].transpose();
    const MatX block = l.mass * jv.transpose() * jv + jw.transpose() * iw * jw;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) h(l.chain[a], l.chain[b]) += block(a, b);
    }
  }
  return h;
}

VecX SimScene::BiasForces(const Kinematics& k) const {
  const int n = static_cast<int>(joints_.size());
  std::vector<Vec3> w(n), alpha(n), acc(n);
  for (int j = 0; j < n; ++j) {
    const Joint& jt = joints_[j];
    Vec3 wp = Vec3::Zero(), ap = Vec3::Zero(), lp = Vec3::Zero(),
         pp = Vec3::Zero();
    if (jt.parent >= 0) {
      wp = w[jt.parent];
      ap = alpha[jt.parent];
      lp = acc[jt.parent];
      pp = k.pos[jt.parent];
    }
    const Vec3 d = k.pos[j] - pp;
    const Vec3 rate = k.axis[j] * qd_[j];
    acc[j] = lp + ap.cross(d) + wp.cross(wp.cross(d));
    if (jt.revolute) {
      w[j] = wp + rate;
      alpha[j] = ap + wp.cross(rate);
    } else {
      w[j] = wp;
      alpha[j] = ap;
      acc[j] += 2.0 * wp.cross(rate);
    }
  }
  VecX c = VecX::Zero(n);
  for (int i = 0; i < kNumLinks; ++i) {
    const Link& l = links_[i];
    const int f = l.frame;
    const Vec3 r = k.link_pos[i] - k.pos[f];
    const Vec3 a_com = acc[f] + alpha[f].cross(r) + w[f].cross(w[f].cross(r));
    const Mat3 iw = k.link_rot[i] * l.inertia * k.link_rot[i].transpose();
    const Vec3 force = l.mass * a_com;
    const Vec3 moment = iw * alpha[f] + w[f].cross(iw * w[f]);
    for (int j : l.chain) {
      if (joints_[j].revolute) {
        c[j] += k.axis[j].cross(k.link_pos[i] - k.pos[j]).dot(force) +
                k.axis[j].dot(moment);
      } else {
        c[j] += k.axis[j].dot(force);
      }
    }
  }
  return c;
}

Vec3 SimScene::ObjectCom() const { return com_pos_; }

Mat3 SimScene::ObjectInertiaWorld() const {
  const Mat3 r = orient_.toRotationMatrix();
  return r * props_.inertia * r.transpose();
}

std::array<Ellipsoid, kNumLinks> SimScene::LinkEllipsoids() const {
  std::array<Ellipsoid, kNumLinks> out;
  if (!has_hand()) return out;
  const Kinematics k = ForwardKinematics(q_);
  for (int i = 0; i < kNumLinks; ++i) {
    out[i] = Ellipsoid(k.link_pos[i], links_[i].radii,
                       MatrixToAxisAngle(k.link_rot[i]));
  }
  return out;
}

BodyState SimScene::ObjectState() const {
  BodyState b;
  b.orientation = orient_;
  b.position = com_pos_ - orient_ * com_local_;
  b.linear_velocity = v_;
  b.angular_velocity = w_;
  return b;
}

PoseParams SimScene::CurrentPose() const {
  PoseParams p = PoseParams::Zero(layout_, PoseRepresentation::kEuler);
  for (int i = 0; i < DofCount(layout_) && has_hand(); ++i) {
    p.values[i] = q_[kRootDofs + i];
  }
  return p;
}

Vec3 SimScene::CurrentRoot() const {
  return has_hand() ? Vec3(q_.head<3>()) : Vec3::Zero();
}

PoseParams SimScene::TargetPose() const {
  PoseParams p = PoseParams::Zero(layout_, PoseRepresentation::kEuler);
  for (int i = 0; i < DofCount(layout_) && has_hand(); ++i) {
    p.values[i] = q_target_[kRootDofs + i];
  }
  return p;
}

Vec3 SimScene::TargetRoot() const {
  return has_hand() ? Vec3(q_target_.head<3>()) : Vec3::Zero();
}

double SimScene::KineticEnergy() const {
  double e = 0;
  if (has_hand()) {
    e += 0.5 * qd_.dot(MassMatrix(ForwardKinematics(q_)) * qd_);
  }
  if (has_object_) {
    e += 0.5 * props_.mass * v_.squaredNorm() +
         0.5 * w_.dot(ObjectInertiaWorld() * w_);
  }
  return e;
}

void SimScene::SetObjectState(const BodyState& s) {
  orient_ = s.orientation.normalized();
  com_pos_ = s.position + orient_ * com_local_;
  v_ = s.linear_velocity;
  w_ = s.angular_velocity;
}

void SimScene::ResetObject() {
  orient_ = q_initial_;
  com_pos_ = p_initial_ + orient_ * com_local_;
  v_.setZero();
  w_.setZero();
}

void SimScene::SetHandVelocity(const VecX& qd) {
  if (qd.size() != qd_.size()) {
    throw InvalidInput("hand velocity: size mismatch");
  }
  qd_ = qd;
}

std::vector<ContactManifold> SimScene::Collide(const Kinematics& k,
                                               double margin) const {
  std::vector<ContactManifold> out;
  const Pose obj_pose{orient_.toRotationMatrix(), com_pos_};
  if (has_hand()) {
    for (int i = 0; i < kNumLinks; ++i) {
      const Pose lp{k.link_rot[i], k.link_pos[i]};
      if (has_object_) {
        if (auto m = DetectContacts(links_[i].shape, lp, object_shape_,
                                    obj_pose, margin, i + 1, kObjectBody)) {
          out.push_back(std::move(*m));
        }
      }
      for (std::size_t s = 0; s < statics_.size(); ++s) {
        const int id = kStaticBodyBase + static_cast<int>(s);
        if (auto m = DetectContacts(statics_[s].shape, statics_[s].pose,
                                    links_[i].shape, lp, margin, id, i + 1)) {
          out.push_back(std::move(*m));
        }
      }
    }
  }
  if (has_object_) {
    for (std::size_t s = 0; s < statics_.size(); ++s) {
      const int id = kStaticBodyBase + static_cast<int>(s);
      if (auto m = DetectContacts(statics_[s].shape, statics_[s].pose,
                                  object_shape_, obj_pose, margin, id,
                                  kObjectBody)) {
        out.push_back(std::move(*m));
      }
    }
  }
  return out;
}

StepReport SimScene::Step(const SimConfig& cfg) {
  const double dt = cfg.dt;
  const int n = static_cast<int>(q_.size());
  const int nsys = n + (has_object_ ? 6 : 0);
  const Kinematics k = ForwardKinematics(q_);

  // Implicit PD: (H + dt Kd + dt^2 Kp) qd' = H qd + dt (Kp (q* - q) - C).
  Eigen::LDLT<MatX> hhat;
  VecX qd_free = VecX::Zero(n);
  if (n > 0) {
    const MatX h = MassMatrix(k);
    const VecX c = BiasForces(k);
    const VecX err = q_target_ - q_;
    std::vector<bool> saturated(n, false);
    for (int pass = 0; pass < 2; ++pass) {
      MatX a = h;
      VecX rhs = h * qd_ - dt * c;
      for (int i = 0; i < n; ++i) {
        if (saturated[i]) {
          const double tau = kp_[i] * err[i] - kd_[i] * qd_[i];
          rhs[i] += dt * std::clamp(tau, -clamp_[i], clamp_[i]);
        } else {
          a(i, i) += dt * kd_[i] + dt * dt * kp_[i];
          rhs[i] += dt * kp_[i] * err[i];
        }
      }
      hhat.compute(a);
      qd_free = hhat.solve(rhs);
      if (pass == 1) break;
      bool any = false;
      for (int i = 0; i < n; ++i) {
        const double tau =
            kp_[i] * (err[i] - dt * qd_free[i]) - kd_[i] * qd_free[i];
        if (std::abs(tau) > clamp_[i]) {
          saturated[i] = true;
          any = true;
        }
      }
      if (!any) break;
    }
  }
  Vec3 v_free = v_, w_free = w_;
  if (has_object_) v_free += dt * cfg.gravity;

  VecX u(nsys);
  u.head(n) = qd_free;
  if (has_object_) {
    u.segment<3>(n) = v_free;
    u.segment<3>(n + 3) = w_free;
  }
  VecX u_push = VecX::Zero(nsys);

  std::vector<SolverContact> contacts;
  for (const ContactManifold& m : Collide(k, cfg.slop)) {
    for (const ContactPoint& p : m.points) {
      SolverContact sc;
      sc.point = p;
      sc.t1 = p.normal.unitOrthogonal();
      sc.t2 = p.normal.cross(sc.t1);
      contacts.push_back(sc);
    }
  }

  StepReport report;
  const int nc = static_cast<int>(contacts.size());
  if (nc > 0) {
    MatX jac = MatX::Zero(3 * nc, nsys);
    const Mat3 iw_inv = has_object_ ? Mat3(ObjectInertiaWorld().inverse())
                                    : Mat3::Identity();
    for (int c = 0; c < nc; ++c) {
      const SolverContact& sc = contacts[c];
      const Vec3 dirs[3] = {sc.point.normal, sc.t1, sc.t2};
      const Vec3& x = sc.point.position;
      auto add_body = [&](int body, double sign) {
        if (body == kObjectBody) {
          for (int r = 0; r < 3; ++r) {
            jac.block<1, 3>(3 * c + r, n) += sign * dirs[r].transpose();
            jac.block<1, 3>(3 * c + r, n + 3) +=
                sign * (x - com_pos_).cross(dirs[r]).transpose();
          }
        } else if (body >= 1 && body <= kNumLinks) {
          const auto pj = PointJacobian(k, body - 1, x);
          for (int r = 0; r < 3; ++r) {
            jac.block(3 * c + r, 0, 1, n) += sign * dirs[r].transpose() * pj;
          }
        }
      };
      add_body(sc.point.body_b, 1.0);
      add_body(sc.point.body_a, -1.0);
    }
    // M^-1 J^T with the PD-augmented hand inertia.
    MatX minv_jt(nsys, 3 * nc);
    if (n > 0) minv_jt.topRows(n) = hhat.solve(jac.leftCols(n).transpose());
    if (has_object_) {
      minv_jt.middleRows(n, 3) =
          jac.middleCols(n, 3).transpose() / props_.mass;
      minv_jt.bottomRows(3) = iw_inv * jac.rightCols(3).transpose();
    }
    const MatX w = jac * minv_jt;
    VecX vc = jac * u;

    for (int c = 0; c < nc; ++c) {
      SolverContact& sc = contacts[c];
      const double depth = sc.point.depth;
      if (depth < 0) {
        sc.target = depth / dt;
      } else {
        const double vn = vc[3 * c];
        sc.target = vn < -cfg.restitution_threshold ? -cfg.restitution * vn
                                                     : 0.0;
        sc.push = cfg.baumgarte * std::max(depth - cfg.slop, 0.0) / dt;
      }
    }

    VecX lambda = VecX::Zero(3 * nc);
    // Frictionless pre-solve so that friction only reacts to genuine sliding
    // rather than to unconverged normal impulses.
    for (int it = 0; it < kNormalPresolveIterations; ++it) {
      double change = 0, scale = 0;
      for (int c = 0; c < nc; ++c) {
        const int r = 3 * c;
        if (w(r, r) <= 0) continue;
        const double ln =
            std::max(0.0, lambda[r] - (vc[r] - contacts[c].target) / w(r, r));
        const double dn = ln - lambda[r];
        if (dn != 0) {
          lambda[r] = ln;
          vc += w.col(r) * dn;
        }
        change = std::max(change, std::abs(dn));
        scale = std::max(scale, ln);
      }
      if (change <= 1e-12 * scale) break;
    }
    const double mu = cfg.friction;
    for (int it = 0; it < cfg.solver_iterations; ++it) {
      for (int c = 0; c < nc; ++c) {
        const int r = 3 * c;
        if (w(r, r) <= 0) continue;
        const double ln =
            std::max(0.0, lambda[r] - (vc[r] - contacts[c].target) / w(r, r));
        const double dn = ln - lambda[r];
        if (dn != 0) {
          lambda[r] = ln;
          vc += w.col(r) * dn;
        }
        const Eigen::Matrix2d wt = w.block<2, 2>(r + 1, r + 1);
        if (wt.determinant() <= 0) continue;
        const Eigen::Vector2d old = lambda.segment<2>(r + 1);
        Eigen::Vector2d lt = old - wt.inverse() * vc.segment<2>(r + 1);
        const double limit = mu * lambda[r];
        const double len = lt.norm();
        if (len > limit) lt *= len > 0 ? limit / len : 0.0;
        const Eigen::Vector2d dt_l = lt - old;
        lambda.segment<2>(r + 1) = lt;
        vc += w.middleCols<2>(r + 1) * dt_l;
      }
    }
    u += minv_jt * lambda;

    // Split-impulse position correction on the normal rows only.
    VecX push = VecX::Zero(3 * nc);
    VecX vp = VecX::Zero(3 * nc);
    bool any_push = false;
    for (const SolverContact& sc : contacts) any_push |= sc.push > 0;
    if (any_push) {
      for (int it = 0; it < cfg.solver_iterations; ++it) {
        for (int c = 0; c < nc; ++c) {
          const int r = 3 * c;
          if (w(r, r) <= 0) continue;
          const double ln =
              std::max(0.0, push[r] - (vp[r] - contacts[c].push) / w(r, r));
          const double dn = ln - push[r];
          if (dn != 0) {
            push[r] = ln;
            vp += w.col(r) * dn;
          }
        }
      }
      u_push = minv_jt * push;
    }

    for (int c = 0; c < nc; ++c) {
      const SolverContact& sc = contacts[c];
      ContactImpulse ci;
      ci.point = sc.point;
      ci.normal = lambda[3 * c];
      ci.tangent = lambda[3 * c + 1] * sc.t1 + lambda[3 * c + 2] * sc.t2;
      const Vec3 on_b = ci.normal * sc.point.normal + ci.tangent;
      double sign = 0;
      if (sc.point.body_b == kObjectBody) sign = 1;
      if (sc.point.body_a == kObjectBody) sign = -1;
      if (sign != 0) {
        report.force += sign * on_b / dt;
        report.torque += (sc.point.position - com_pos_).cross(sign * on_b) / dt;
        if (ci.normal > 0) ++report.contact_count;
      }
      report.impulses.push_back(ci);
    }
  }

  // Integrate.
  if (n > 0) {
    qd_ = u.head(n);
    q_ += dt * (qd_ + u_push.head(n));
  }
  if (has_object_) {
    v_ = u.segment<3>(n);
    w_ = u.segment<3>(n + 3);
    com_pos_ += dt * (v_ + u_push.segment<3>(n));
    orient_ = IntegrateOrientation(orient_, w_ + u_push.segment<3>(n + 3), dt);
  }
  // Link speeds are bounded by joint rates times a 0.1 m lever.
  double speed = v_.norm();
  if (n > 0) {
    speed = std::max({speed, qd_.head<kRootDofs>().norm(),
                      0.1 * qd_.tail(n - kRootDofs).cwiseAbs().maxCoeff()});
  }
  if (!std::isfinite(speed) || speed > cfg.divergence_speed ||
      !q_.allFinite() || !com_pos_.allFinite()) {
    throw NumericalError("simulation diverged (speed " +
                         std::to_string(speed) + " m/s)");
  }
  return report;
}

bool ResetTriggered(const Vec3& p, const Quat& q, const Vec3& p0,
                    const Quat& q0, const SimConfig& cfg) {
  if ((p - p0).norm() > cfg.reset_position) return true;
  return QuatAngle(q.conjugate() * q0) > cfg.reset_angle;
}

RolloutRecord Rollout(SimScene scene, const SimConfig& cfg,
                      bool keep_impulses) {
  cfg.Validate();
  RolloutRecord rec;
  rec.p_initial = scene.initial_object_position();
  rec.q_initial = scene.initial_object_orientation();
  rec.pose_target = scene.TargetPose();
  rec.root_target = scene.TargetRoot();
  for (int t = 0; t < cfg.steps; ++t) {
    StepReport rep = scene.Step(cfg);
    rec.force.push_back(rep.force);
    rec.torque.push_back(rep.torque);
    rec.contacts.push_back(rep.contact_count);
    bool reset = false;
    if (scene.has_object() && cfg.enable_reset) {
      const BodyState b = scene.ObjectState();
      if (ResetTriggered(b.position, b.orientation, rec.p_initial,
                         rec.q_initial, cfg)) {
        scene.ResetObject();
        reset = true;
        ++rec.reset_count;
      }
    }
    rec.reset.push_back(reset);
    rec.object.push_back(scene.ObjectState());
    if (keep_impulses) rec.all_impulses.push_back(rep.impulses);
    if (t + 1 == cfg.steps) rec.final_contacts = std::move(rep.impulses);
  }
  const BodyState b = scene.ObjectState();
  rec.p_final = b.position;
  rec.q_final = b.orientation;
  rec.pose_final = scene.CurrentPose();
  rec.root_final = scene.CurrentRoot();
  return rec;
}

}  // namespace graspstab
