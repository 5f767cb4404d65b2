#include "cg/potentials.hpp"

#include "cg/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace cg {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using Vec3 = std::array<double, 3>;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
void axpy(Vec3& y, double s, const Vec3& x)
{
    for (int k = 0; k < 3; ++k) y[k] += s * x[k];
}

/// Angle between u and v with its gradients with respect to u and v.
double angle_between(const Vec3& u, const Vec3& v, Vec3& grad_u, Vec3& grad_v)
{
    const double nu = norm(u), nv = norm(v);
    const double c = dot(u, v) / (nu * nv);
    const double s = norm(cross(u, v)) / (nu * nv);
    const double theta = std::atan2(s, c);
    for (int k = 0; k < 3; ++k) {
        const double uh = u[k] / nu, vh = v[k] / nv;
        grad_u[k] = (c * uh - vh) / (nu * s);
        grad_v[k] = (c * vh - uh) / (nv * s);
    }
    return theta;
}

/// IUPAC dihedral of sites p1..p4 and its Cartesian gradient.
double dihedral_angle(const std::array<Vec3, 4>& p, std::array<Vec3, 4>* grad)
{
    const Vec3 b1 = sub(p[1], p[0]);
    const Vec3 b2 = sub(p[2], p[1]);
    const Vec3 b3 = sub(p[3], p[2]);
    const Vec3 n1 = cross(b1, b2);
    const Vec3 n2 = cross(b2, b3);
    const double nb2 = norm(b2);
    double phi = std::atan2(nb2 * dot(b1, n2), dot(n1, n2));
    if (phi <= -std::numbers::pi) phi = std::numbers::pi;
    if (grad) {
        const double a2 = dot(n1, n1), c2 = dot(n2, n2);
        const double fg = dot(b1, b2) / nb2; // projection of b1 on the central bond
        const double hg = dot(b3, b2) / nb2;
        auto& g = *grad;
        g[0] = scale(n1, -nb2 / a2);
        g[3] = scale(n2, nb2 / c2);
        g[1] = scale(n1, nb2 / a2 + fg / a2);
        axpy(g[1], hg / c2, n2);
        g[2] = scale(n2, -nb2 / c2 - hg / c2);
        axpy(g[2], -fg / a2, n1);
    }
    return phi;
}

} // namespace

// ---------------------------------------------------------------------------
// PairPotential
// ---------------------------------------------------------------------------

PairPotential PairPotential::hard_wall(PairPotential inner)
{
    return PairPotential(HardWallPair{std::make_shared<const PairPotential>(std::move(inner))});
}

PairValue PairPotential::eval(double y) const
{
    return std::visit(
        Overloaded{
            [y](const QuadraticPair& q) {
                const double d = y - q.a;
                return PairValue{0.5 * d * d, d, false};
            },
            [y](const QuarticW1&) {
                const double d = y - 1.0;
                return PairValue{0.5 * d * d * d * d + 0.5 * y * y, 2.0 * d * d * d + y, false};
            },
            [y](const QuarticW2&) {
                const double d = y - 2.1;
                return PairValue{0.25 * d * d * d * d, d * d * d, false};
            },
            [y](const PolynomialPair& p) {
                double v = 0.0, dv = 0.0;
                for (std::size_t k = p.coefficients.size(); k-- > 0;) {
                    dv = dv * y + v;
                    v = v * y + p.coefficients[k];
                }
                return PairValue{v, dv, false};
            },
            [y](const HardWallPair& h) {
                if (y < 0.0)
                    return PairValue{std::numeric_limits<double>::infinity(), 0.0, true};
                return h.inner->eval(y);
            },
        },
        kind_);
}

bool PairPotential::is_zero() const
{
    const auto* p = std::get_if<PolynomialPair>(&kind_);
    if (!p) return false;
    for (double c : p->coefficients)
        if (c != 0.0) return false;
    return true;
}

std::string PairPotential::describe() const
{
    return std::visit(Overloaded{
                          [](const QuadraticPair& q) {
                              std::ostringstream os;
                              os.precision(17);
                              os << "quadratic:" << q.a;
                              return os.str();
                          },
                          [](const QuarticW1&) { return std::string("paper-quartic-W1"); },
                          [](const QuarticW2&) { return std::string("paper-quartic-W2"); },
                          [](const PolynomialPair& p) {
                              if (p.coefficients.empty()) return std::string("zero");
                              std::ostringstream os;
                              os.precision(17);
                              os << "polynomial:";
                              for (std::size_t k = 0; k < p.coefficients.size(); ++k)
                                  os << (k ? "," : "") << p.coefficients[k];
                              return os.str();
                          },
                          [](const HardWallPair& h) { return "hard-wall:" + h.inner->describe(); },
                      },
                      kind_);
}

PairPotential PairPotential::parse(const std::string& spec)
{
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + s + "' in pair potential '" + spec + "'");
        }
    };
    if (head == "quadratic") return quadratic(tail.empty() ? 1.0 : number(tail));
    if (head == "paper-quartic-W1" || head == "W1") return w1();
    if (head == "paper-quartic-W2" || head == "W2") return w2();
    if (head == "zero") return zero();
    if (head == "polynomial") {
        std::vector<double> c;
        std::stringstream ss(tail);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) c.push_back(number(item));
        return polynomial(std::move(c));
    }
    if (head == "hard-wall") {
        if (tail.empty()) throw ConfigError("hard-wall needs an inner potential");
        return hard_wall(parse(tail));
    }
    throw ConfigError("unknown pair potential '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Generic helpers
// ---------------------------------------------------------------------------

double MolecularSystem::energy(std::span<const double> q) const
{
    std::vector<double> g(q.size());
    return energy(q, g);
}

double ReactionCoordinate::value(std::span<const double> q) const
{
    std::vector<double> g(q.size());
    return value(q, g);
}

SystemValue eval_system(const MolecularSystem& s, std::span<const double> q)
{
    if (q.size() != s.dof())
        throw ConfigError(s.name() + ": expected " + std::to_string(s.dof()) + " coordinates, got " +
                          std::to_string(q.size()));
    SystemValue out;
    out.grad.assign(q.size(), 0.0);
    out.V = s.energy(q, out.grad);
    return out;
}

RcValue eval_rc(const ReactionCoordinate& rc, std::span<const double> q, bool need_laplacian)
{
    if (q.size() != rc.dof())
        throw ConfigError(rc.name() + ": expected " + std::to_string(rc.dof()) + " coordinates, got " +
                          std::to_string(q.size()));
    RcValue out;
    out.grad.assign(q.size(), 0.0);
    out.xi = rc.value(q, out.grad);
    out.laplacian = rc.laplacian(q);
    if (need_laplacian && !out.laplacian)
        throw ConfigError("reaction coordinate '" + rc.name() +
                          "' has no closed-form laplacian; use the identity coefficient path");
    return out;
}

double wrap_periodic(double x, double period)
{
    return x - period * std::ceil((x - 0.5 * period) / period);
}

namespace {

double take(const Params& p, const char* key, double fallback)
{
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void reject_unknown(const Params& p, std::initializer_list<const char*> known, const std::string& who)
{
    for (const auto& [key, value] : p) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(who + ": unknown parameter '" + key + "'");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Toy2d
// ---------------------------------------------------------------------------

Toy2d::Toy2d(const Params& p)
{
    reject_unknown(p, {"k", "separable"}, "toy2d");
    k = take(p, "k", k);
    separable = take(p, "separable", 0.0) != 0.0;
}

double Toy2d::energy(std::span<const double> q, std::span<double> grad) const
{
    const double x = q[0], y = q[1];
    const double w = x * x - 1.0;
    if (separable) {
        grad[0] = 4.0 * x * w;
        grad[1] = k * y;
        return w * w + 0.5 * k * y * y;
    }
    const double d = y - x;
    grad[0] = 4.0 * x * w - k * d;
    grad[1] = k * d;
    return w * w + 0.5 * k * d * d;
}

Params Toy2d::parameters() const { return {{"k", k}, {"separable", separable ? 1.0 : 0.0}}; }

// ---------------------------------------------------------------------------
// ThreeAtom
// ---------------------------------------------------------------------------

ThreeAtom::ThreeAtom(const Params& p)
{
    reject_unknown(p, {"epsilon", "k_theta", "l_eq", "theta_saddle", "theta_well"}, "three-atom");
    epsilon = take(p, "epsilon", epsilon);
    k_theta = take(p, "k_theta", k_theta);
    l_eq = take(p, "l_eq", l_eq);
    theta_saddle = take(p, "theta_saddle", theta_saddle);
    theta_well = take(p, "theta_well", theta_well);
}

double ThreeAtom::angle_energy(double theta) const
{
    const double u = theta - theta_saddle, dt = delta_theta();
    const double w = u * u - dt * dt;
    return 0.5 * k_theta * w * w;
}

double ThreeAtom::angle_force(double theta) const
{
    const double u = theta - theta_saddle, dt = delta_theta();
    return 2.0 * k_theta * u * (u * u - dt * dt);
}

double ThreeAtom::energy(std::span<const double> q, std::span<double> grad) const
{
    const Vec3 qa{q[0], 0.0, 0.0};
    const Vec3 qc{q[1], q[2], 0.0};
    const double rab = std::abs(q[0]);
    const double rbc = norm(qc);
    Vec3 ga{}, gc{};
    const double theta = angle_between(qa, qc, ga, gc);
    const double dw = angle_force(theta);
    const double sa = (rab - l_eq) / epsilon;
    const double sc = (rbc - l_eq) / epsilon;
    grad[0] = sa * (q[0] >= 0.0 ? 1.0 : -1.0) + dw * ga[0];
    grad[1] = sc * qc[0] / rbc + dw * gc[0];
    grad[2] = sc * qc[1] / rbc + dw * gc[1];
    return 0.5 / epsilon * ((rab - l_eq) * (rab - l_eq) + (rbc - l_eq) * (rbc - l_eq)) + angle_energy(theta);
}

std::vector<double> ThreeAtom::reference_configuration() const
{
    const double theta = theta_saddle + delta_theta();
    return {l_eq, l_eq * std::cos(theta), l_eq * std::sin(theta)};
}

Params ThreeAtom::parameters() const
{
    return {{"epsilon", epsilon},
            {"k_theta", k_theta},
            {"l_eq", l_eq},
            {"theta_saddle", theta_saddle},
            {"theta_well", theta_well}};
}

// ---------------------------------------------------------------------------
// Butane
// ---------------------------------------------------------------------------

Butane::Butane(const Params& p)
{
    reject_unknown(p, {"k2", "k3", "l_eq", "theta_eq", "c1", "c2", "c3"}, "butane");
    k2 = take(p, "k2", k2);
    k3 = take(p, "k3", k3);
    l_eq = take(p, "l_eq", l_eq);
    theta_eq = take(p, "theta_eq", theta_eq);
    c1 = take(p, "c1", c1);
    c2 = take(p, "c2", c2);
    c3 = take(p, "c3", c3);
}

double Butane::torsion_energy(double phi) const
{
    const double c = std::cos(phi);
    return c1 * (1.0 - c) + 2.0 * c2 * (1.0 - c * c) + c3 * (1.0 + 3.0 * c - 4.0 * c * c * c);
}

double Butane::torsion_force(double phi) const
{
    const double c = std::cos(phi);
    const double dvdc = -c1 - 4.0 * c2 * c + c3 * (3.0 - 12.0 * c * c);
    return -std::sin(phi) * dvdc;
}

std::array<std::array<double, 3>, 4> butane_sites(std::span<const double> q)
{
    return {{{q[0], q[1], 0.0}, {0.0, 0.0, 0.0}, {0.0, q[2], 0.0}, {q[3], q[4], q[5]}}};
}

double Butane::energy(std::span<const double> q, std::span<double> grad) const
{
    const auto p = butane_sites(q);
    std::array<Vec3, 4> g{};
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
        const Vec3 b = sub(p[i + 1], p[i]);
        const double r = norm(b);
        v += 0.5 * k2 * (r - l_eq) * (r - l_eq);
        const double s = k2 * (r - l_eq) / r;
        axpy(g[i + 1], s, b);
        axpy(g[i], -s, b);
    }
    for (int i = 1; i <= 2; ++i) {
        const Vec3 u = sub(p[i - 1], p[i]);
        const Vec3 w = sub(p[i + 1], p[i]);
        Vec3 gu{}, gw{};
        const double theta = angle_between(u, w, gu, gw);
        v += 0.5 * k3 * (theta - theta_eq) * (theta - theta_eq);
        const double s = k3 * (theta - theta_eq);
        axpy(g[i - 1], s, gu);
        axpy(g[i + 1], s, gw);
        axpy(g[i], -s, gu);
        axpy(g[i], -s, gw);
    }
    std::array<Vec3, 4> gphi{};
    const double phi = dihedral_angle(p, &gphi);
    v += torsion_energy(phi);
    const double s = torsion_force(phi);
    for (int i = 0; i < 4; ++i) axpy(g[i], s, gphi[i]);

    grad[0] = g[0][0];
    grad[1] = g[0][1];
    grad[2] = g[2][1];
    grad[3] = g[3][0];
    grad[4] = g[3][1];
    grad[5] = g[3][2];
    return v;
}

std::vector<double> Butane::configuration(double r1, double r2, double r3, double theta1, double theta2,
                                          double phi) const
{
    return {r1 * std::sin(theta1),
            r1 * std::cos(theta1),
            r2,
            r3 * std::sin(theta2) * std::cos(phi),
            r2 - r3 * std::cos(theta2),
            -r3 * std::sin(theta2) * std::sin(phi)};
}

std::vector<double> Butane::reference_configuration() const
{
    return configuration(l_eq, l_eq, l_eq, theta_eq, theta_eq, 0.0);
}

Params Butane::parameters() const
{
    return {{"k2", k2}, {"k3", k3}, {"l_eq", l_eq}, {"theta_eq", theta_eq}, {"c1", c1}, {"c2", c2}, {"c3", c3}};
}

// ---------------------------------------------------------------------------
// Reaction coordinates
// ---------------------------------------------------------------------------

double ToyAbscissa::value(std::span<const double> q, std::span<double> grad) const
{
    grad[0] = 1.0;
    grad[1] = 0.0;
    return q[0];
}

double BondAngle::value(std::span<const double> q, std::span<double> grad) const
{
    Vec3 ga{}, gc{};
    const double theta = angle_between({q[0], 0.0, 0.0}, {q[1], q[2], 0.0}, ga, gc);
    grad[0] = ga[0];
    grad[1] = gc[0];
    grad[2] = gc[1];
    return theta;
}

double SquaredEndDistance::value(std::span<const double> q, std::span<double> grad) const
{
    const double dx = q[0] - q[1];
    grad[0] = 2.0 * dx;
    grad[1] = -2.0 * dx;
    grad[2] = 2.0 * q[2];
    return dx * dx + q[2] * q[2];
}

double Dihedral::value(std::span<const double> q, std::span<double> grad) const
{
    std::array<Vec3, 4> g{};
    const double phi = dihedral_angle(butane_sites(q), &g);
    grad[0] = g[0][0];
    grad[1] = g[0][1];
    grad[2] = g[2][1];
    grad[3] = g[3][0];
    grad[4] = g[3][1];
    grad[5] = g[3][2];
    return phi;
}

std::optional<double> Dihedral::period() const { return 2.0 * std::numbers::pi; }

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

std::unique_ptr<MolecularSystem> make_system(const std::string& name, const Params& overrides)
{
    if (name == "toy2d") return std::make_unique<Toy2d>(overrides);
    if (name == "three-atom") return std::make_unique<ThreeAtom>(overrides);
    if (name == "butane") return std::make_unique<Butane>(overrides);
    throw ConfigError("unknown system '" + name + "' (expected toy2d, three-atom or butane)");
}

std::unique_ptr<ReactionCoordinate> make_rc(const std::string& system, const std::string& rc)
{
    if (system == "toy2d" && rc == "x") return std::make_unique<ToyAbscissa>();
    if (system == "three-atom" && rc == "angle") return std::make_unique<BondAngle>();
    if (system == "three-atom" && rc == "distance") return std::make_unique<SquaredEndDistance>();
    if (system == "butane" && rc == "dihedral") return std::make_unique<Dihedral>();
    throw ConfigError("unknown reaction coordinate '" + rc + "' for system '" + system + "'");
}

} // namespace cg
