#include "dirrho/copulas.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dirrho/errors.hpp"
#include "dirrho/rng.hpp"

namespace dirrho {

namespace {

void check_margin_subset(const std::vector<int>& K, int d) {
    if (K.empty()) throw std::invalid_argument("margin subset is empty");
    std::vector<int> sorted = K;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] < 0 || sorted[i] >= d)
            throw std::invalid_argument("margin index out of range");
        if (i > 0 && sorted[i] == sorted[i - 1])
            throw std::invalid_argument("margin subset has a repeated index");
    }
}

// keeps the sample strictly inside the open cube
double clamp_open(double u) {
    constexpr double lo = 0x1p-1000;
    constexpr double hi = 1.0 - 0x1p-53;
    return std::min(std::max(u, lo), hi);
}

std::string format_param(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

double CopulaModel::cdf(std::span<const double> u) const {
    if (static_cast<int>(u.size()) != dim())
        throw std::invalid_argument("cdf point has wrong dimension");
    for (double x : u)
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("cdf point outside the unit cube");
    return cdf_unchecked(u);
}

DataMatrix sample(const CopulaModel& model, std::size_t count, std::mt19937_64& rng) {
    if (count < 1) throw std::invalid_argument("sample count must be >= 1");
    DataMatrix out(count, static_cast<std::size_t>(model.dim()));
    for (std::size_t r = 0; r < count; ++r) model.sample_row(rng, out.row(r));
    return out;
}

DataMatrix survival_reflect(const DataMatrix& data) {
    DataMatrix out(data.rows(), data.cols());
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t c = 0; c < data.cols(); ++c) {
            double x = data(r, c);
            if (!(x > 0.0 && x < 1.0))
                throw std::domain_error("survival reflection needs entries strictly in (0,1)");
            out(r, c) = 1.0 - x;
        }
    return out;
}

// ---------------------------------------------------------------------------
// ProductCopula
// ---------------------------------------------------------------------------

ProductCopula::ProductCopula(int d) : d_(d) {
    if (d < 1) throw std::invalid_argument("product copula needs d >= 1");
}

std::string ProductCopula::spec_string() const { return "product:d=" + std::to_string(d_); }

double ProductCopula::cdf_unchecked(std::span<const double> u) const {
    double p = 1.0;
    for (double x : u) p *= x;
    return p;
}

std::unique_ptr<CopulaModel> ProductCopula::margin(const std::vector<int>& K) const {
    check_margin_subset(K, d_);
    return std::make_unique<ProductCopula>(static_cast<int>(K.size()));
}

void ProductCopula::sample_row(std::mt19937_64& rng, std::span<double> out) const {
    for (double& x : out) x = unit_open(rng);
}

std::unique_ptr<CopulaModel> ProductCopula::clone() const {
    return std::make_unique<ProductCopula>(*this);
}

// ---------------------------------------------------------------------------
// ComonotoneCopula
// ---------------------------------------------------------------------------

ComonotoneCopula::ComonotoneCopula(int d) : d_(d) {
    if (d < 1) throw std::invalid_argument("comonotone copula needs d >= 1");
}

std::string ComonotoneCopula::spec_string() const { return "comonotone:d=" + std::to_string(d_); }

double ComonotoneCopula::cdf_unchecked(std::span<const double> u) const {
    return *std::min_element(u.begin(), u.end());
}

std::unique_ptr<CopulaModel> ComonotoneCopula::margin(const std::vector<int>& K) const {
    check_margin_subset(K, d_);
    return std::make_unique<ComonotoneCopula>(static_cast<int>(K.size()));
}

void ComonotoneCopula::sample_row(std::mt19937_64& rng, std::span<double> out) const {
    const double u = unit_open(rng);
    for (double& x : out) x = u;
}

std::unique_ptr<CopulaModel> ComonotoneCopula::clone() const {
    return std::make_unique<ComonotoneCopula>(*this);
}

// ---------------------------------------------------------------------------
// FgmCopula
// ---------------------------------------------------------------------------

FgmCopula::FgmCopula(int d, double lambda) : d_(d), lambda_(lambda) {
    if (d < 2) throw std::invalid_argument("FGM copula needs d >= 2");
    if (!(std::abs(lambda) <= 1.0))
        throw std::invalid_argument("FGM parameter must satisfy |lambda| <= 1");
}

std::string FgmCopula::spec_string() const {
    return "fgm:lambda=" + format_param(lambda_) + ":d=" + std::to_string(d_);
}

double FgmCopula::cdf_unchecked(std::span<const double> u) const {
    double prod = 1.0, mirror = 1.0;
    for (double x : u) {
        prod *= x;
        mirror *= 1.0 - x;
    }
    return prod * (1.0 + lambda_ * mirror);
}

std::unique_ptr<CopulaModel> FgmCopula::margin(const std::vector<int>& K) const {
    check_margin_subset(K, d_);
    if (static_cast<int>(K.size()) == d_) return clone();
    // any proper margin kills the perturbation: (1 - u_i) = 0 at u_i = 1
    return std::make_unique<ProductCopula>(static_cast<int>(K.size()));
}

void FgmCopula::sample_row(std::mt19937_64& rng, std::span<double> out) const {
    const double bound = 1.0 + std::abs(lambda_);
    for (;;) {
        double density = 1.0;
        for (double& x : out) {
            x = unit_open(rng);
            density *= 1.0 - 2.0 * x;
        }
        density = 1.0 + lambda_ * density;
        if (unit_open(rng) * bound <= density) return;
    }
}

std::unique_ptr<CopulaModel> FgmCopula::clone() const {
    return std::make_unique<FgmCopula>(*this);
}

// ---------------------------------------------------------------------------
// ClaytonCopula
// ---------------------------------------------------------------------------

ClaytonCopula::ClaytonCopula(int d, double theta) : d_(d), theta_(theta) {
    if (d < 1) throw std::invalid_argument("Clayton copula needs d >= 1");
    if (!(theta > 0.0)) throw std::invalid_argument("Clayton parameter must satisfy theta > 0");
}

std::string ClaytonCopula::spec_string() const {
    return "clayton:theta=" + format_param(theta_) + ":d=" + std::to_string(d_);
}

double ClaytonCopula::cdf_unchecked(std::span<const double> u) const {
    if (product_limit()) {
        double p = 1.0;
        for (double x : u) p *= x;
        return p;
    }
    for (double x : u)
        if (x == 0.0) return 0.0;
    double s = 1.0 - static_cast<double>(d_);
    for (double x : u) s += std::pow(x, -theta_);
    // the generator sum can dip nonpositive for d >= 3, theta < 1
    if (s <= 0.0) return 0.0;
    return std::pow(s, -1.0 / theta_);
}

std::unique_ptr<CopulaModel> ClaytonCopula::margin(const std::vector<int>& K) const {
    check_margin_subset(K, d_);
    return std::make_unique<ClaytonCopula>(static_cast<int>(K.size()), theta_);
}

void ClaytonCopula::sample_row(std::mt19937_64& rng, std::span<double> out) const {
    if (product_limit()) {
        for (double& x : out) x = unit_open(rng);
        return;
    }
    // Marshall-Olkin frailty: psi(t) = (1+t)^(-1/theta)
    const double w = gamma_draw(rng, 1.0 / theta_);
    for (double& x : out)
        x = clamp_open(std::pow(1.0 + exponential_draw(rng) / w, -1.0 / theta_));
}

std::unique_ptr<CopulaModel> ClaytonCopula::clone() const {
    return std::make_unique<ClaytonCopula>(*this);
}

// ---------------------------------------------------------------------------
// Family spec parsing
// ---------------------------------------------------------------------------

namespace {

double parse_double_field(const std::string& text, const std::string& spec) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw UsageError("bad numeric value \"" + text + "\" in family spec \"" + spec + "\"");
    return value;
}

} // namespace

std::unique_ptr<CopulaModel> parse_family_spec(std::string_view spec) {
    const std::string text(spec);
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t colon = text.find(':', pos);
        parts.push_back(text.substr(pos, colon == std::string::npos ? colon : colon - pos));
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    if (parts.empty() || parts[0].empty()) throw UsageError("empty family spec");

    const std::string family = parts[0];
    int d = -1;
    double theta = std::nan(""), lambda = std::nan("");
    for (std::size_t i = 1; i < parts.size(); ++i) {
        std::size_t eq = parts[i].find('=');
        if (eq == std::string::npos)
            throw UsageError("expected key=value, got \"" + parts[i] + "\" in \"" + text + "\"");
        const std::string key = parts[i].substr(0, eq);
        const std::string value = parts[i].substr(eq + 1);
        if (key == "d") {
            d = static_cast<int>(parse_double_field(value, text));
        } else if (key == "theta") {
            theta = parse_double_field(value, text);
        } else if (key == "lambda") {
            lambda = parse_double_field(value, text);
        } else {
            throw UsageError("unknown key \"" + key + "\" in family spec \"" + text + "\"");
        }
    }
    if (d < 2) throw UsageError("family spec \"" + text + "\" needs d >= 2");

    try {
        if (family == "product") return std::make_unique<ProductCopula>(d);
        if (family == "comonotone") return std::make_unique<ComonotoneCopula>(d);
        if (family == "clayton") {
            if (std::isnan(theta)) throw UsageError("clayton spec needs theta=...");
            return std::make_unique<ClaytonCopula>(d, theta);
        }
        if (family == "fgm") {
            if (std::isnan(lambda)) throw UsageError("fgm spec needs lambda=...");
            return std::make_unique<FgmCopula>(d, lambda);
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string(e.what()) + " (in family spec \"" + text + "\")");
    }
    throw UsageError("unknown family \"" + family + "\" (expected clayton, fgm, product, comonotone)");
}

} // namespace dirrho
