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

// Impulse-based simulation of a PD-driven ellipsoid hand and a free rigid
// object.
//
// The hand is a reduced-coordinate multibody. Its generalized coordinates
// are the root translation (three prismatic joints along the world axes)
// followed by the pose vector in Euler form: the palm's three angles act
// about the palm center, every other angle about the joint anchor shared
// with the parent link. The coordinates therefore equal (t, pose) exactly.
// Hand links are not affected by gravity and do not collide with each
// other.
//
// Each step applies implicit PD control with torque clamping, gravity on
// the object, contact detection with a speculative margin, a projected
// Gauss-Seidel solve with Coulomb friction and thresholded restitution, a
// split-impulse position correction, and semi-implicit Euler integration.

#ifndef GRASPSTAB_SIM_H_
#define GRASPSTAB_SIM_H_

#include <optional>
#include <vector>

#include "graspstab/contact.h"
#include "graspstab/geom.h"
#include "graspstab/hand.h"

namespace graspstab {

struct SimConfig {
  double dt = 1.0 / 240.0;
  int steps = 120;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  double friction = 0.8;
  double restitution = 1.0;
  double restitution_threshold = 0.2;  // m/s
  // Finger joints. A negative kd selects 2 sqrt(kp * I) per DoF, with I the
  // diagonal of the mass matrix at the initial pose.
  double pd_kp = 3.0;
  double pd_kd = -1.0;
  double torque_clamp = 2.0;
  // Root translation (N/m, N) and root orientation (N m/rad, N m) drives.
  double root_kp_linear = 2000.0;
  double root_force_clamp = 100.0;
  double root_kp_angular = 30.0;
  double root_torque_clamp = 20.0;
  int solver_iterations = 16;
  double baumgarte = 0.2;
  double slop = 1e-3;  // also the speculative contact margin
  double reset_position = 0.1;
  double reset_angle = 0.3 * kPi;
  bool enable_reset = true;
  double link_density = 1100.0;
  double max_initial_penetration = 0.03;
  double divergence_speed = 1e3;

  // Throws InvalidInput for out-of-range values.
  void Validate() const;
};

struct BodyState {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
};

// Body identifiers used in contacts.
inline constexpr int kObjectBody = 0;
// Hand link i is body i + 1; static body k is kStaticBodyBase + k.
inline constexpr int kStaticBodyBase = 100;

struct ContactImpulse {
  ContactPoint point;
  double normal = 0;                  // N s, along point.normal on body B
  Vec3 tangent = Vec3::Zero();        // N s, world frame, on body B
};

struct StepReport {
  std::vector<ContactImpulse> impulses;
  Vec3 force = Vec3::Zero();   // contact resultant on the object, N
  Vec3 torque = Vec3::Zero();  // about the object's center of mass, N m
  int contact_count = 0;       // object contacts carrying a normal impulse
};

struct RolloutRecord {
  std::vector<Vec3> force;
  std::vector<Vec3> torque;
  std::vector<int> contacts;
  std::vector<bool> reset;
  std::vector<BodyState> object;  // object state after each step
  int reset_count = 0;

  // Initial and final object pose (object frame origin) and hand targets.
  Vec3 p_initial = Vec3::Zero();
  Quat q_initial = Quat::Identity();
  Vec3 p_final = Vec3::Zero();
  Quat q_final = Quat::Identity();
  PoseParams pose_target;
  Vec3 root_target = Vec3::Zero();
  PoseParams pose_final;
  Vec3 root_final = Vec3::Zero();

  // Contacts of the last step.
  std::vector<ContactImpulse> final_contacts;
  // Every impulse of every step, when requested.
  std::vector<std::vector<ContactImpulse>> all_impulses;

  int steps() const { return static_cast<int>(force.size()); }
};

struct HandSetup {
  HandTemplate tmpl = HandTemplate::Default();
  ShapeParams beta;
  PoseParams theta;  // initial pose; its layout fixes the joint layout
  Vec3 root_t = Vec3::Zero();
};

struct ObjectSetup {
  TriMesh mesh;           // object frame
  RigidBodyProps props;   // com and inertia in the object frame
  Vec3 position = Vec3::Zero();  // object frame origin, world
  Quat orientation = Quat::Identity();
};

struct StaticBody {
  ConvexShape shape;
  Pose pose;
};

struct Targets {
  PoseParams theta;
  Vec3 root_t = Vec3::Zero();
};

class SimScene {
 public:
  int dof_count() const { return static_cast<int>(q_.size()); }
  bool has_hand() const { return !joints_.empty(); }
  bool has_object() const { return has_object_; }
  DofLayout layout() const { return layout_; }

  // Posed hand links.
  std::array<Ellipsoid, kNumLinks> LinkEllipsoids() const;
  // Object frame pose, not the center of mass.
  BodyState ObjectState() const;
  const RigidBodyProps& object_props() const { return props_; }
  double object_mass() const { return props_.mass; }
  // Hand coordinates (root translation then pose) and velocities.
  const Eigen::VectorXd& q() const { return q_; }
  const Eigen::VectorXd& qd() const { return qd_; }
  PoseParams CurrentPose() const;
  Vec3 CurrentRoot() const;

  // Total kinetic energy of hand and object.
  double KineticEnergy() const;

  // Object pose at build time.
  const Vec3& initial_object_position() const { return p_initial_; }
  const Quat& initial_object_orientation() const { return q_initial_; }
  PoseParams TargetPose() const;
  Vec3 TargetRoot() const;

  void SetObjectState(const BodyState& s);
  // Restores the build-time object pose and zeroes its velocities.
  void ResetObject();
  void SetHandVelocity(const Eigen::VectorXd& qd);

  // Advances one step.
  StepReport Step(const SimConfig& cfg);

  friend SimScene BuildScene(const std::optional<HandSetup>& hand,
                             const std::optional<ObjectSetup>& object,
                             const Targets& targets, const SimConfig& cfg,
                             std::vector<StaticBody> statics);

 private:
  struct Joint {
    bool revolute = true;
    int parent = -1;  // parent joint, -1 for the world
    Mat3 offset_rot = Mat3::Identity();
    Vec3 offset_pos = Vec3::Zero();
    int axis = 0;
  };
  struct Link {
    int frame = -1;  // last joint of the link
    Vec3 offset = Vec3::Zero();
    Vec3 radii = Vec3::Ones();
    double mass = 0;
    Mat3 inertia = Mat3::Identity();  // body frame
    ConvexShape shape;
    std::vector<int> chain;  // ancestor joints, root first
  };
  struct Kinematics {
    std::vector<Mat3> rot;  // joint frames
    std::vector<Vec3> pos;
    std::vector<Vec3> axis;  // world axes
    std::array<Mat3, kNumLinks> link_rot;
    std::array<Vec3, kNumLinks> link_pos;
  };

  Kinematics ForwardKinematics(const Eigen::VectorXd& q) const;
  Eigen::MatrixXd MassMatrix(const Kinematics& k) const;
  Eigen::VectorXd BiasForces(const Kinematics& k) const;
  // Linear velocity Jacobian of world point x on link l (3 x n).
  Eigen::Matrix<double, 3, Eigen::Dynamic> PointJacobian(
      const Kinematics& k, int link, const Vec3& x) const;
  Vec3 ObjectCom() const;
  Mat3 ObjectInertiaWorld() const;
  std::vector<ContactManifold> Collide(const Kinematics& k,
                                       double margin) const;

  DofLayout layout_ = DofLayout::kReduced;
  std::vector<Joint> joints_;
  std::array<Link, kNumLinks> links_;
  Eigen::VectorXd q_, qd_;
  Eigen::VectorXd q_target_;
  Eigen::VectorXd kp_, kd_, clamp_;

  bool has_object_ = false;
  ConvexShape object_shape_;  // centered at the center of mass
  RigidBodyProps props_;
  Vec3 com_local_ = Vec3::Zero();
  Vec3 com_pos_ = Vec3::Zero();
  Quat orient_ = Quat::Identity();
  Vec3 v_ = Vec3::Zero();
  Vec3 w_ = Vec3::Zero();
  Vec3 p_initial_ = Vec3::Zero();
  Quat q_initial_ = Quat::Identity();

  std::vector<StaticBody> statics_;
};

// Builds the scene with zero velocities. Throws InvalidInput if the
// initial hand-object penetration exceeds cfg.max_initial_penetration.
SimScene BuildScene(const std::optional<HandSetup>& hand,
                    const std::optional<ObjectSetup>& object,
                    const Targets& targets, const SimConfig& cfg,
                    std::vector<StaticBody> statics = {});

// True when the object has drifted past the reset thresholds.
bool ResetTriggered(const Vec3& p, const Quat& q, const Vec3& p0,
                    const Quat& q0, const SimConfig& cfg);

// Runs cfg.steps steps, applying the reset rule after each one.
RolloutRecord Rollout(SimScene scene, const SimConfig& cfg,
                      bool keep_impulses = false);

}  // namespace graspstab

#endif  // GRASPSTAB_SIM_H_
