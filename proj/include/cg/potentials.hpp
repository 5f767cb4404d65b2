#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cg {

// ---------------------------------------------------------------------------
// Pair potentials for 1D chains
// ---------------------------------------------------------------------------

struct PairValue {
    double value = 0.0;
    double derivative = 0.0;
    /// Set when the argument lies in an excluded region (hard wall); value and
    /// derivative are then meaningless.
    bool infinite = false;
};

/// (y - a)^2 / 2
struct QuadraticPair {
    double a = 1.0;
};
/// (y - 1)^4 / 2 + y^2 / 2, the nearest-neighbour term of the benchmark chain.
struct QuarticW1 {};
/// (y - 2.1)^4 / 4, the next-to-nearest-neighbour term of the benchmark chain.
struct QuarticW2 {};
/// sum_k c_k y^k; an empty coefficient list is the zero potential.
struct PolynomialPair {
    std::vector<double> coefficients;
};

class PairPotential;
/// inner(y) for y >= 0, +infinity otherwise (ordering constraint).
struct HardWallPair {
    std::shared_ptr<const PairPotential> inner;
};

class PairPotential {
public:
    using Kind = std::variant<QuadraticPair, QuarticW1, QuarticW2, PolynomialPair, HardWallPair>;

    PairPotential() : kind_(QuadraticPair{}) {}
    PairPotential(Kind kind) : kind_(std::move(kind)) {}

    static PairPotential quadratic(double a) { return PairPotential(QuadraticPair{a}); }
    static PairPotential w1() { return PairPotential(QuarticW1{}); }
    static PairPotential w2() { return PairPotential(QuarticW2{}); }
    static PairPotential zero() { return PairPotential(PolynomialPair{}); }
    static PairPotential polynomial(std::vector<double> c) { return PairPotential(PolynomialPair{std::move(c)}); }
    static PairPotential hard_wall(PairPotential inner);

    /// Parses "quadratic", "quadratic:<a>", "paper-quartic-W1", "paper-quartic-W2",
    /// "zero", "polynomial:c0,c1,...", and "hard-wall:<inner spec>".
    static PairPotential parse(const std::string& spec);

    PairValue eval(double y) const;
    double value(double y) const { return eval(y).value; }
    double derivative(double y) const { return eval(y).derivative; }

    bool is_zero() const;
    const Kind& kind() const { return kind_; }
    std::string describe() const;

private:
    Kind kind_;
};

inline PairValue eval_pair(const PairPotential& p, double y) { return p.eval(y); }

// ---------------------------------------------------------------------------
// Molecular systems and reaction coordinates
// ---------------------------------------------------------------------------

using Params = std::map<std::string, double>;

/// Potential energy surface in reduced coordinates.
class MolecularSystem {
public:
    virtual ~MolecularSystem() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dof() const = 0;
    /// Returns V(q) and writes grad V into `grad` (same size as q).
    virtual double energy(std::span<const double> q, std::span<double> grad) const = 0;
    /// A configuration near the bottom of the main (or right) well.
    virtual std::vector<double> reference_configuration() const = 0;
    virtual Params parameters() const = 0;

    double energy(std::span<const double> q) const;
};

struct RcValue {
    double xi = 0.0;
    std::vector<double> grad;
    std::optional<double> laplacian;
};

class ReactionCoordinate {
public:
    virtual ~ReactionCoordinate() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dof() const = 0;
    /// Writes grad xi into `grad` and returns xi.
    virtual double value(std::span<const double> q, std::span<double> grad) const = 0;
    /// Laplacian in reduced coordinates, if available in closed form.
    virtual std::optional<double> laplacian(std::span<const double> q) const { (void)q; return std::nullopt; }
    virtual bool has_laplacian() const { return false; }
    /// Period for angular coordinates; values are wrapped into (-P/2, P/2].
    virtual std::optional<double> period() const { return std::nullopt; }

    double value(std::span<const double> q) const;
};

/// (V, grad V) with a dimension check.
struct SystemValue {
    double V = 0.0;
    std::vector<double> grad;
};
SystemValue eval_system(const MolecularSystem& s, std::span<const double> q);

/// (xi, grad xi, laplacian) with a dimension check. Throws ConfigError when
/// `need_laplacian` is set and the coordinate has no closed-form laplacian.
RcValue eval_rc(const ReactionCoordinate& rc, std::span<const double> q, bool need_laplacian = false);

// Concrete systems -----------------------------------------------------------

/// V(x, y) = (x^2 - 1)^2 + (k/2)(y - x)^2, or (x^2 - 1)^2 + (k/2) y^2 when
/// `separable` is non-zero.
class Toy2d final : public MolecularSystem {
public:
    explicit Toy2d(const Params& overrides = {});
    std::string name() const override { return "toy2d"; }
    std::size_t dof() const override { return 2; }
    using MolecularSystem::energy;
    double energy(std::span<const double> q, std::span<double> grad) const override;
    std::vector<double> reference_configuration() const override { return {1.0, 1.0}; }
    Params parameters() const override;

    double k = 5.0;
    bool separable = false;
};

/// Three planar atoms with two stiff bonds and a double-well angle term.
/// Reduced coordinates (qA_x, qC_x, qC_y); qB = 0 and qA on the x axis.
class ThreeAtom final : public MolecularSystem {
public:
    explicit ThreeAtom(const Params& overrides = {});
    std::string name() const override { return "three-atom"; }
    std::size_t dof() const override { return 3; }
    using MolecularSystem::energy;
    double energy(std::span<const double> q, std::span<double> grad) const override;
    std::vector<double> reference_configuration() const override;
    Params parameters() const override;

    /// W3(theta) = k_theta/2 ((theta - theta_saddle)^2 - dtheta^2)^2
    double angle_energy(double theta) const;
    double angle_force(double theta) const; ///< dW3/dtheta
    double delta_theta() const { return theta_saddle - theta_well; }

    double epsilon = 1e-3;
    double k_theta = 208.0;
    double l_eq = 1.0;
    double theta_saddle = 1.5707963267948966;
    double theta_well = 1.187; ///< left well; dtheta = theta_saddle - theta_well
};

/// United-atom butane. Reduced coordinates (q1_x, q1_y, q3_y, q4_x, q4_y, q4_z);
/// q2 = 0, q1 in the xy plane and q3 on the y axis.
class Butane final : public MolecularSystem {
public:
    explicit Butane(const Params& overrides = {});
    std::string name() const override { return "butane"; }
    std::size_t dof() const override { return 6; }
    using MolecularSystem::energy;
    double energy(std::span<const double> q, std::span<double> grad) const override;
    std::vector<double> reference_configuration() const override;
    Params parameters() const override;

    double torsion_energy(double phi) const;
    double torsion_force(double phi) const; ///< dV_torsion/dphi

    /// Reduced coordinates of the configuration with given internal coordinates.
    std::vector<double> configuration(double r1, double r2, double r3, double theta1, double theta2,
                                      double phi) const;

    double k2 = 1000.0;
    double k3 = 208.0;
    double l_eq = 1.0;
    double theta_eq = 1.187;
    double c1 = 1.18;
    double c2 = -0.23;
    double c3 = 2.64;
};

/// 3D Cartesian positions of the four butane sites from reduced coordinates.
std::array<std::array<double, 3>, 4> butane_sites(std::span<const double> q);

// Concrete reaction coordinates ---------------------------------------------

/// xi(x, y) = x on the toy system.
class ToyAbscissa final : public ReactionCoordinate {
public:
    std::string name() const override { return "x"; }
    std::size_t dof() const override { return 2; }
    using ReactionCoordinate::value;
    double value(std::span<const double> q, std::span<double> grad) const override;
    std::optional<double> laplacian(std::span<const double>) const override { return 0.0; }
    bool has_laplacian() const override { return true; }
};

/// xi1 = angle ABC of the three-atom molecule.
class BondAngle final : public ReactionCoordinate {
public:
    std::string name() const override { return "angle"; }
    std::size_t dof() const override { return 3; }
    using ReactionCoordinate::value;
    double value(std::span<const double> q, std::span<double> grad) const override;
};

/// xi2 = |qA - qC|^2 of the three-atom molecule.
class SquaredEndDistance final : public ReactionCoordinate {
public:
    std::string name() const override { return "distance"; }
    std::size_t dof() const override { return 3; }
    using ReactionCoordinate::value;
    double value(std::span<const double> q, std::span<double> grad) const override;
    std::optional<double> laplacian(std::span<const double>) const override { return 6.0; }
    bool has_laplacian() const override { return true; }
};

/// Butane dihedral, IUPAC sign convention (0 = cis), wrapped into (-pi, pi].
class Dihedral final : public ReactionCoordinate {
public:
    std::string name() const override { return "dihedral"; }
    std::size_t dof() const override { return 6; }
    using ReactionCoordinate::value;
    double value(std::span<const double> q, std::span<double> grad) const override;
    std::optional<double> period() const override;
};

// Catalog --------------------------------------------------------------------

/// "toy2d", "three-atom", "butane".
std::unique_ptr<MolecularSystem> make_system(const std::string& name, const Params& overrides = {});
/// "x" (toy2d), "angle" / "distance" (three-atom), "dihedral" (butane).
std::unique_ptr<ReactionCoordinate> make_rc(const std::string& system, const std::string& rc);

/// Wraps x into (-period/2, period/2].
double wrap_periodic(double x, double period);

} // namespace cg
