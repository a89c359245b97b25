#pragma once

#include <string>

namespace gel {

enum class LinkKind { EL, ET, CU };

// Concave link rho(v) applied to lambda'phi_q. The three standard members:
//   EL: rho(v) = log(1+v), domain v > -1
//   ET: rho(v) = -exp(v)
//   CU: rho(v) = -v - v^2/2  (normalized so rho_v(0) = rho_vv(0) = -1)
// The Wilks scaling factor 2*rho_vv(0)/rho_v(0)^2 equals -2 for all three.
class LinkFunction {
 public:
  explicit LinkFunction(LinkKind kind) : kind_(kind) {}

  LinkKind kind() const { return kind_; }

  double rho(double v) const;
  double rho_v(double v) const;
  double rho_vv(double v) const;

  double rho0() const;     // rho(0)
  double rho_v0() const;   // rho_v(0)
  double rho_vv0() const;  // rho_vv(0)

  // Membership in the admissible domain V. eps_dom shrinks the EL domain to
  // v >= -1 + eps_dom so log stays finite and implied weights positive;
  // ET/CU are unrestricted.
  bool in_domain(double v, double eps_dom) const;

  double wilks_scale() const {
    return 2.0 * rho_vv0() / (rho_v0() * rho_v0());
  }

 private:
  LinkKind kind_;
};

LinkFunction make_link(LinkKind kind);

// EL domain safeguard: 1e-2 scaled by the block count.
inline double el_domain_floor(int block_count) {
  return 1e-2 / static_cast<double>(block_count);
}

LinkKind parse_link_kind(const std::string& name);  // "el" | "et" | "cu"
std::string link_kind_name(LinkKind kind);

}  // namespace gel
