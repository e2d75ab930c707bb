#include "cnfp/flows/region.hpp"

#include <cmath>

#include "cnfp/errors.hpp"

namespace cnfp::flows {

Box::Box(Eigen::VectorXd low, Eigen::VectorXd high) : low_(std::move(low)), high_(std::move(high)) {
  if (low_.size() != high_.size() || low_.size() == 0) throw ShapeError("box bounds must share a positive dimension");
  if (!low_.allFinite() || !high_.allFinite()) throw InvalidStateError("box bounds must be finite");
  for (Eigen::Index d = 0; d < low_.size(); ++d)
    if (!(low_(d) < high_(d))) throw InvalidStateError("box requires low < high on every axis");
}

Ball::Ball(Eigen::VectorXd center, double radius) : center_(std::move(center)), radius_(radius) {
  if (center_.size() == 0) throw ShapeError("ball needs a positive dimension");
  if (!center_.allFinite() || !std::isfinite(radius_)) throw InvalidStateError("ball parameters must be finite");
  if (!(radius_ > 0.0)) throw InvalidStateError("ball radius must be positive");
}

Ellipsoid::Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape)
    : center_(std::move(center)), shape_(std::move(shape)) {
  const auto m = center_.size();
  if (m == 0 || shape_.rows() != m || shape_.cols() != m)
    throw ShapeError("ellipsoid shape factor must be square and match the center");
  if (!center_.allFinite() || !shape_.allFinite()) throw InvalidStateError("ellipsoid parameters must be finite");
  for (Eigen::Index r = 0; r < m; ++r) {
    if (!(shape_(r, r) > 0.0)) throw InvalidStateError("ellipsoid shape factor needs a positive diagonal");
    for (Eigen::Index c = r + 1; c < m; ++c)
      if (shape_(r, c) != 0.0) throw InvalidStateError("ellipsoid shape factor must be lower triangular");
  }
}

double Ellipsoid::log_det_shape() const { return shape_.diagonal().array().log().sum(); }

int region_dim(const ConvexRegion& region) {
  return std::visit([](const auto& r) { return r.dim(); }, region);
}

std::string_view region_kind(const ConvexRegion& region) {
  struct {
    std::string_view operator()(const Box&) const { return "box"; }
    std::string_view operator()(const Ball&) const { return "ball"; }
    std::string_view operator()(const Ellipsoid&) const { return "ellipsoid"; }
  } kind;
  return std::visit(kind, region);
}

bool contains(const ConvexRegion& region, const Eigen::VectorXd& y) {
  if (y.size() != region_dim(region)) throw ShapeError("point dimension does not match region");
  struct {
    const Eigen::VectorXd& y;
    bool operator()(const Box& b) const {
      return (y.array() > b.low().array()).all() && (y.array() < b.high().array()).all();
    }
    bool operator()(const Ball& b) const { return (y - b.center()).norm() < b.radius(); }
    bool operator()(const Ellipsoid& e) const {
      const Eigen::VectorXd u = e.shape().triangularView<Eigen::Lower>().solve(y - e.center());
      return u.norm() < 1.0;
    }
  } visitor{y};
  return std::visit(visitor, region);
}

}  // namespace cnfp::flows
