#include "svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace mg {

namespace {

constexpr double kTau = 1e-12;
constexpr Eigen::Index kGramLimit = 3000;

// Linear kernel columns, cached as a full Gram matrix for moderate sizes.
class LinearKernel {
public:
    explicit LinearKernel(const Eigen::MatrixXd& x) : x_(x), diag_(x.rowwise().squaredNorm()) {
        if (x.rows() <= kGramLimit) gram_ = x * x.transpose();
    }

    Eigen::VectorXd column(Eigen::Index i) const {
        if (gram_) return gram_->col(i);
        return x_ * x_.row(i).transpose();
    }
    double diag(Eigen::Index i) const { return diag_(i); }
    const Eigen::MatrixXd& data() const { return x_; }

private:
    const Eigen::MatrixXd& x_;
    Eigen::VectorXd diag_;
    std::optional<Eigen::MatrixXd> gram_;
};

struct SmoResult {
    Eigen::VectorXd alpha;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

SmoResult solve_smo(const LinearKernel& k, const Eigen::VectorXd& y, double c, const SvmSolverOptions& opts) {
    const Eigen::Index n = y.size();
    SmoResult res;
    Eigen::VectorXd& alpha = res.alpha;
    alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

    auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < c) || (y(t) < 0 && alpha(t) > 0); };
    auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < c); };

    while (res.iterations < opts.max_iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t)
            if (in_up(t) && -y(t) * grad(t) >= gmax) {
                gmax = -y(t) * grad(t);
                i = t;
            }
        if (i < 0) {
            res.converged = true;
            break;
        }
        const Eigen::VectorXd ki = k.column(i);

        double gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double ygt = y(t) * grad(t);
            gmax2 = std::max(gmax2, ygt);
            const double b = gmax + ygt;
            if (b > 0.0) {
                double quad = k.diag(i) + k.diag(t) - 2.0 * ki(t);
                if (quad <= 0.0) quad = kTau;
                const double obj = -(b * b) / quad;
                if (obj <= best) {
                    best = obj;
                    j = t;
                }
            }
        }
        if (gmax + gmax2 < opts.tolerance || j < 0) {
            res.converged = true;
            break;
        }
        ++res.iterations;

        const Eigen::VectorXd kj = k.column(j);
        const double old_i = alpha(i), old_j = alpha(j);
        double quad = k.diag(i) + k.diag(j) - 2.0 * ki(j);
        if (quad <= 0.0) quad = kTau;
        if (y(i) != y(j)) {
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0) {
                if (alpha(j) < 0) {
                    alpha(j) = 0;
                    alpha(i) = diff;
                }
            } else if (alpha(i) < 0) {
                alpha(i) = 0;
                alpha(j) = -diff;
            }
            if (diff > 0) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = c - diff;
                }
            } else if (alpha(j) > c) {
                alpha(j) = c;
                alpha(i) = c + diff;
            }
        } else {
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > c) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = sum - c;
                }
            } else if (alpha(j) < 0) {
                alpha(j) = 0;
                alpha(i) = sum;
            }
            if (sum > c) {
                if (alpha(j) > c) {
                    alpha(j) = c;
                    alpha(i) = sum - c;
                }
            } else if (alpha(i) < 0) {
                alpha(i) = 0;
                alpha(j) = sum;
            }
        }
        const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
        // Q_ti = y_t y_i K_ti
        grad += (y.array() * (y(i) * di * ki.array() + y(j) * dj * kj.array())).matrix();
    }

    // bias from free vectors, or the midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = y(t) * grad(t);
        if (alpha(t) >= c) {
            if (y(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha(t) <= 0) {
            if (y(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            sum += yg;
            ++free;
        }
    }
    const double rho = free > 0 ? sum / static_cast<double>(free) : 0.5 * (ub + lb);
    res.bias = -rho;
    return res;
}

Hyperplane assemble(const LinearKernel& k, const Eigen::VectorXd& y, double c, const SmoResult& smo) {
    Hyperplane h;
    h.c_param = c;
    h.iterations = smo.iterations;
    h.weights = k.data().transpose() * (smo.alpha.array() * y.array()).matrix();
    h.bias = smo.bias;
    const Eigen::VectorXd margins = (y.array() * ((k.data() * h.weights).array() + h.bias)).matrix();
    h.primal_objective = 0.5 * h.weights.squaredNorm() + c * (1.0 - margins.array()).max(0.0).sum();
    h.dual_objective = smo.alpha.sum() - 0.5 * h.weights.squaredNorm();
    return h;
}

void check_labels(const Eigen::VectorXi& y) {
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        require(y(i) == 1 || y(i) == -1, "SVM labels must be +1 or -1");
        (y(i) > 0 ? pos : neg) = true;
    }
    require(pos && neg, "SVM training data must contain both classes");
}

} // namespace

double svm_primal_objective(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, const Eigen::VectorXd& w, double b,
                            double c_param) {
    const Eigen::ArrayXd margins = y.cast<double>().array() * ((x * w).array() + b);
    return 0.5 * w.squaredNorm() + c_param * (1.0 - margins).max(0.0).sum();
}

Hyperplane train_linear_svm(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, double c_param,
                            const SvmSolverOptions& opts) {
    require(x.rows() == y.size() && x.rows() > 0, "one label per training point required");
    require(x.allFinite(), "SVM inputs must be finite");
    require(c_param > 0.0 && std::isfinite(c_param), "C must be positive");
    check_labels(y);
    const LinearKernel k(x);
    const Eigen::VectorXd yd = y.cast<double>();
    const SmoResult smo = solve_smo(k, yd, c_param, opts);
    if (!smo.converged) fail(ErrorCode::Numerical, "SMO did not converge within the iteration budget");
    Hyperplane h = assemble(k, yd, c_param, smo);
    require(h.weights.norm() > 0.0, "trained SVM has a zero weight vector");
    return h;
}

void Split::validate() const {
    require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must be in (0, 1)");
    require(test_fraction > 0.0 && test_fraction < 1.0, "test fraction must be in (0, 1)");
    require(train_fraction + test_fraction <= 1.0 + 1e-12, "train + test fractions must not exceed 1");
}

Split parse_split(const std::string& text) {
    const auto slash = text.find('/');
    require(slash != std::string::npos, "split must look like 80/20");
    Split s;
    try {
        s.train_fraction = std::stod(text.substr(0, slash)) / 100.0;
        s.test_fraction = std::stod(text.substr(slash + 1)) / 100.0;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidArgument, "split must look like 80/20");
    }
    s.validate();
    return s;
}

FieldDistribution fields_one_vs_rest(const ManifoldSet& ms, const Split& split, const FieldOptions& opts) {
    ms.validate();
    split.validate();
    require(opts.c_param > 0.0, "C must be positive");

    const std::size_t p = ms.num_manifolds();
    std::vector<std::vector<Eigen::Index>> train_rows(p), test_rows(p);

    // stratified split per class
    for (std::size_t c = 0; c < p; ++c) {
        const auto n = static_cast<std::size_t>(ms.manifolds[c].size());
        require(n >= 2, "class '" + ms.manifolds[c].label + "' needs at least one train and one test point");
        std::vector<Eigen::Index> order(n);
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Rng rng = make_rng(derive_seed(opts.seed, Stream::Split, c));
        std::shuffle(order.begin(), order.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(split.train_fraction * static_cast<double>(n)));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        auto n_test = static_cast<std::size_t>(std::llround(split.test_fraction * static_cast<double>(n)));
        n_test = std::clamp<std::size_t>(n_test, 1, n - n_train);
        train_rows[c].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_rows[c].assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                            order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
    }

    std::size_t total_train = 0;
    for (const auto& r : train_rows) total_train += r.size();
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(total_train), ms.ambient_dim());
    std::vector<std::size_t> train_class;
    {
        Eigen::Index r = 0;
        for (std::size_t c = 0; c < p; ++c)
            for (Eigen::Index row : train_rows[c]) {
                x_train.row(r++) = ms.manifolds[c].points.row(row);
                train_class.push_back(c);
            }
    }
    const LinearKernel kernel(x_train);

    auto centroid_of = [&](const std::vector<std::vector<Eigen::Index>>& rows, std::size_t cls, bool positive) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(ms.ambient_dim());
        std::size_t count = 0;
        for (std::size_t c = 0; c < p; ++c) {
            if ((c == cls) != positive) continue;
            for (Eigen::Index row : rows[c]) {
                sum += ms.manifolds[c].points.row(row).transpose();
                ++count;
            }
        }
        return Eigen::VectorXd(sum / static_cast<double>(count));
    };

    struct ClassFields {
        ClassFieldSummary summary;
        std::vector<std::pair<std::size_t, double>> raw; // token, field
        std::optional<std::string> warning;
    };
    std::vector<ClassFields> per_class(p);

    parallel_for(p, [&](std::size_t cls) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(total_train));
        for (std::size_t r = 0; r < total_train; ++r) y(static_cast<Eigen::Index>(r)) = train_class[r] == cls ? 1.0 : -1.0;
        SvmSolverOptions solver;
        const SmoResult smo = solve_smo(kernel, y, opts.c_param, solver);
        if (!smo.converged)
            fail(ErrorCode::Numerical, "SMO did not converge for class '" + ms.manifolds[cls].label + "'");
        Hyperplane h = assemble(kernel, y, opts.c_param, smo);
        h.class_label = ms.manifolds[cls].label;
        if (!(h.weights.norm() > 0.0))
            fail(ErrorCode::Numerical, "zero weight vector for class '" + h.class_label + "'");

        const auto& centroid_rows = opts.train_centroids ? train_rows : test_rows;
        const double f_pos = h.field(centroid_of(centroid_rows, cls, true));
        const double f_neg = h.field(centroid_of(centroid_rows, cls, false));

        ClassFields& out = per_class[cls];
        out.summary.label = h.class_label;
        out.summary.train_count = train_rows[cls].size();
        out.summary.test_count = test_rows[cls].size();
        out.summary.denominator = f_pos - f_neg;
        out.summary.excluded = !(out.summary.denominator > 0.0);
        if (out.summary.excluded)
            out.warning = "class '" + h.class_label + "': non-positive centroid field gap " +
                          std::to_string(out.summary.denominator) + "; excluded from normalised fields";
        const Manifold& m = ms.manifolds[cls];
        for (Eigen::Index row : test_rows[cls])
            out.raw.emplace_back(m.token_indices[static_cast<std::size_t>(row)], h.field(m.points.row(row).transpose()));
        std::sort(out.raw.begin(), out.raw.end());
    });

    FieldDistribution fd;
    fd.split = split;
    fd.c_param = opts.c_param;
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ms.manifolds[a].label < ms.manifolds[b].label; });
    for (std::size_t cls : order) {
        ClassFields& cf = per_class[cls];
        if (cf.warning) fd.warnings.push_back(*cf.warning);
        if (cf.summary.excluded) fd.excluded_classes.push_back(cf.summary.label);
        fd.per_class_counts[cf.summary.label] += cf.raw.size();
        for (const auto& [token, raw] : cf.raw) {
            fd.raw_fields.push_back(raw);
            fd.normalized_fields.push_back(cf.summary.excluded ? std::numeric_limits<double>::quiet_NaN()
                                                               : raw / cf.summary.denominator);
            fd.field_labels.push_back(cf.summary.label);
            fd.field_tokens.push_back(token);
        }
        fd.classes.push_back(cf.summary);
    }
    fd.tpr = tpr(fd.raw_fields);
    return fd;
}

double tpr(std::span<const double> raw_fields) {
    require(!raw_fields.empty(), "true positive rate needs at least one field");
    std::size_t positive = 0;
    for (double f : raw_fields)
        if (f > 0.0) ++positive;
    return static_cast<double>(positive) / static_cast<double>(raw_fields.size());
}

std::string field_histogram_csv(const FieldDistribution& fd, std::size_t bins) {
    require(bins >= 1, "histogram needs at least one bin");
    std::ostringstream out;
    out.precision(17);
    out << "kind,bin_lower,bin_upper,count,density\n";
    auto emit = [&](const char* kind, const std::vector<double>& values) {
        std::vector<double> v;
        for (double x : values)
            if (std::isfinite(x)) v.push_back(x);
        if (v.empty()) return;
        double lo = *std::min_element(v.begin(), v.end());
        double hi = *std::max_element(v.begin(), v.end());
        if (hi == lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double width = (hi - lo) / static_cast<double>(bins);
        std::vector<std::size_t> counts(bins, 0);
        for (double x : v) {
            auto b = static_cast<std::size_t>((x - lo) / width);
            ++counts[std::min(b, bins - 1)];
        }
        for (std::size_t b = 0; b < bins; ++b)
            out << kind << ',' << lo + width * static_cast<double>(b) << ',' << lo + width * static_cast<double>(b + 1)
                << ',' << counts[b] << ',' << static_cast<double>(counts[b]) / (static_cast<double>(v.size()) * width)
                << '\n';
    };
    emit("raw", fd.raw_fields);
    emit("normalized", fd.normalized_fields);
    return out.str();
}

} // namespace mg
