#include "gel/link.hpp"

#include <cmath>
#include <limits>

#include "gel/errors.hpp"

namespace gel {

double LinkFunction::rho(double v) const {
  switch (kind_) {
    case LinkKind::EL:
      return v > -1.0 ? std::log1p(v) : -std::numeric_limits<double>::infinity();
    case LinkKind::ET:
      return -std::exp(v);
    case LinkKind::CU:
      return -v - 0.5 * v * v;
  }
  return 0.0;
}

double LinkFunction::rho_v(double v) const {
  switch (kind_) {
    case LinkKind::EL:
      return 1.0 / (1.0 + v);
    case LinkKind::ET:
      return -std::exp(v);
    case LinkKind::CU:
      return -1.0 - v;
  }
  return 0.0;
}

double LinkFunction::rho_vv(double v) const {
  switch (kind_) {
    case LinkKind::EL:
      return -1.0 / ((1.0 + v) * (1.0 + v));
    case LinkKind::ET:
      return -std::exp(v);
    case LinkKind::CU:
      return -1.0;
  }
  return 0.0;
}

double LinkFunction::rho0() const {
  switch (kind_) {
    case LinkKind::EL:
      return 0.0;
    case LinkKind::ET:
      return -1.0;
    case LinkKind::CU:
      return 0.0;
  }
  return 0.0;
}

double LinkFunction::rho_v0() const {
  return kind_ == LinkKind::EL ? 1.0 : -1.0;
}

double LinkFunction::rho_vv0() const { return -1.0; }

bool LinkFunction::in_domain(double v, double eps_dom) const {
  if (kind_ == LinkKind::EL) return v >= -1.0 + eps_dom;
  return true;
}

LinkFunction make_link(LinkKind kind) { return LinkFunction(kind); }

LinkKind parse_link_kind(const std::string& name) {
  if (name == "el" || name == "EL") return LinkKind::EL;
  if (name == "et" || name == "ET") return LinkKind::ET;
  if (name == "cu" || name == "CU") return LinkKind::CU;
  throw ConfigError("unknown link kind '" + name + "' (expected el, et or cu)");
}

std::string link_kind_name(LinkKind kind) {
  switch (kind) {
    case LinkKind::EL:
      return "el";
    case LinkKind::ET:
      return "et";
    case LinkKind::CU:
      return "cu";
  }
  return "?";
}

}  // namespace gel
