#include "bsdelab/regression.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bsdelab/parallel.hpp"

namespace bsdelab {

EstimatorSpec EstimatorSpec::global(int degree) {
    if (degree < 0) throw SpecError("polynomial degree must be >= 0");
    EstimatorSpec e;
    e.kind = EstimatorKind::GlobalLeastSquares;
    e.degree = degree;
    return e;
}

EstimatorSpec EstimatorSpec::partition(int bins, RangePolicy range, double range_sigmas) {
    if (bins < 1) throw SpecError("partitioning needs at least one bin");
    if (!(range_sigmas > 0.0)) throw SpecError("range_sigmas must be positive");
    EstimatorSpec e;
    e.kind = EstimatorKind::LocalPartitioning;
    e.bins = bins;
    e.range = range;
    e.range_sigmas = range_sigmas;
    return e;
}

EstimatorSpec EstimatorSpec::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else
            cur += c;
    }
    parts.push_back(cur);
    const std::string& head = parts[0];
    if (head == "global") return global(parts.size() > 1 ? std::stoi(parts[1]) : 3);
    if (head == "partition" || head == "partitioning") {
        const int bins = parts.size() > 1 ? std::stoi(parts[1]) : 64;
        if (parts.size() > 2) {
            if (parts[2] == "minmax") return partition(bins, RangePolicy::MinMax);
            if (parts[2].rfind("std", 0) == 0)
                return partition(bins, RangePolicy::StdDevClip, std::stod(parts[2].substr(3)));
            throw SpecError("unknown range policy '" + parts[2] + "'");
        }
        return partition(bins);
    }
    throw SpecError("unknown estimator '" + text + "' (expected global:q or partition:bins)");
}

std::string EstimatorSpec::name() const {
    if (kind == EstimatorKind::GlobalLeastSquares)
        return "global:" + std::to_string(degree);
    std::string n = "partition:" + std::to_string(bins);
    if (range == RangePolicy::MinMax) {
        n += ":minmax";
    } else if (range_sigmas != 3.0) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), ":std%g", range_sigmas);
        n += buf;
    }
    return n;
}

std::size_t polynomial_basis_size(int d, int degree) {
    // C(d + degree, degree)
    std::size_t num = 1;
    for (int i = 1; i <= degree; ++i)
        num = num * static_cast<std::size_t>(d + i) / static_cast<std::size_t>(i);
    return num;
}

namespace {

void enumerate_powers(int d, std::vector<int>& current, int remaining,
                      std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == d) {
        out.push_back(current);
        return;
    }
    for (int p = 0; p <= remaining; ++p) {
        current.push_back(p);
        enumerate_powers(d, current, remaining - p, out);
        current.pop_back();
    }
}

std::vector<std::vector<int>> basis_powers(int d, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    enumerate_powers(d, cur, degree, out);
    // graded order: total degree first, then lexicographic
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        int sa = 0, sb = 0;
        for (int v : a) sa += v;
        for (int v : b) sb += v;
        return sa < sb;
    });
    return out;
}

double eval_basis(const std::vector<int>& powers, const double* xstd) {
    double v = 1.0;
    for (std::size_t i = 0; i < powers.size(); ++i)
        for (int p = 0; p < powers[i]; ++p) v *= xstd[i];
    return v;
}

FittedRegression fit_global(const double* features, std::size_t P, int d,
                            std::span<const double> responses, const EstimatorSpec& est,
                            int threads) {
    FittedRegression reg;
    reg.kind = EstimatorKind::GlobalLeastSquares;
    reg.d = d;
    reg.degree = est.degree;
    reg.powers = basis_powers(d, est.degree);
    const std::size_t m = reg.powers.size();
    if (P <= m)
        throw SpecError("global fit needs more rows than basis functions (" +
                        std::to_string(P) + " <= " + std::to_string(m) + ")");

    // per-coordinate standardization, fixed-order chunk combine
    std::vector<double> sums(kParallelChunks * static_cast<std::size_t>(d), 0.0);
    std::vector<double> sumsqs(kParallelChunks * static_cast<std::size_t>(d), 0.0);
    parallel_chunks(P, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        double* s = sums.data() + chunk * static_cast<std::size_t>(d);
        double* q = sumsqs.data() + chunk * static_cast<std::size_t>(d);
        for (std::size_t p = begin; p < end; ++p)
            for (int i = 0; i < d; ++i) {
                const double v = features[p * static_cast<std::size_t>(d) + i];
                s[i] += v;
                q[i] += v * v;
            }
    });
    reg.shift.assign(static_cast<std::size_t>(d), 0.0);
    reg.scale.assign(static_cast<std::size_t>(d), 1.0);
    for (int i = 0; i < d; ++i) {
        double s = 0.0, q = 0.0;
        for (std::size_t c = 0; c < kParallelChunks; ++c) {
            s += sums[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
            q += sumsqs[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
        }
        const double mean = s / static_cast<double>(P);
        const double var = std::max(0.0, q / static_cast<double>(P) - mean * mean);
        reg.shift[static_cast<std::size_t>(i)] = mean;
        reg.scale[static_cast<std::size_t>(i)] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    Eigen::MatrixXd A(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(m));
    parallel_chunks(P, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        double xstd[32];
        for (std::size_t p = begin; p < end; ++p) {
            for (int i = 0; i < d; ++i)
                xstd[i] = (features[p * static_cast<std::size_t>(d) + i] -
                           reg.shift[static_cast<std::size_t>(i)]) /
                          reg.scale[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < m; ++j)
                A(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) =
                    eval_basis(reg.powers[j], xstd);
        }
    });

    Eigen::Map<const Eigen::VectorXd> rhs(responses.data(),
                                          static_cast<Eigen::Index>(P));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    reg.rank = static_cast<int>(qr.rank());
    reg.rank_deficient = reg.rank < static_cast<int>(m);
    Eigen::VectorXd beta = qr.solve(rhs);
    reg.coeffs.assign(beta.data(), beta.data() + beta.size());
    for (double cval : reg.coeffs)
        if (!std::isfinite(cval)) throw NumericalError("least-squares fit produced non-finite coefficients");
    return reg;
}

FittedRegression fit_partition(const double* features, std::size_t P, int d,
                               std::span<const double> responses, const EstimatorSpec& est,
                               int threads) {
    FittedRegression reg;
    reg.kind = EstimatorKind::LocalPartitioning;
    reg.d = d;
    reg.bins = est.bins;
    const int B = est.bins;
    std::size_t n_cells = 1;
    for (int i = 0; i < d; ++i) {
        n_cells *= static_cast<std::size_t>(B);
        if (n_cells > (1u << 22))
            throw SpecError("partitioning grid too large (bins^d exceeds 2^22)");
    }

    // cell range per the policy, fixed-order chunk combine
    reg.lo.assign(static_cast<std::size_t>(d), 0.0);
    reg.hi.assign(static_cast<std::size_t>(d), 0.0);
    if (est.range == RangePolicy::MinMax) {
        std::vector<double> mins(kParallelChunks * static_cast<std::size_t>(d),
                                 std::numeric_limits<double>::infinity());
        std::vector<double> maxs(kParallelChunks * static_cast<std::size_t>(d),
                                 -std::numeric_limits<double>::infinity());
        parallel_chunks(P, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
            double* mn = mins.data() + chunk * static_cast<std::size_t>(d);
            double* mx = maxs.data() + chunk * static_cast<std::size_t>(d);
            for (std::size_t p = begin; p < end; ++p)
                for (int i = 0; i < d; ++i) {
                    const double v = features[p * static_cast<std::size_t>(d) + i];
                    mn[i] = std::min(mn[i], v);
                    mx[i] = std::max(mx[i], v);
                }
        });
        for (int i = 0; i < d; ++i) {
            double mn = std::numeric_limits<double>::infinity();
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < kParallelChunks; ++c) {
                mn = std::min(mn,
                              mins[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)]);
                mx = std::max(mx,
                              maxs[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)]);
            }
            reg.lo[static_cast<std::size_t>(i)] = mn;
            reg.hi[static_cast<std::size_t>(i)] = mx;
        }
    } else {
        std::vector<double> sums(kParallelChunks * static_cast<std::size_t>(d), 0.0);
        std::vector<double> sumsqs(kParallelChunks * static_cast<std::size_t>(d), 0.0);
        parallel_chunks(P, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
            double* s = sums.data() + chunk * static_cast<std::size_t>(d);
            double* q = sumsqs.data() + chunk * static_cast<std::size_t>(d);
            for (std::size_t p = begin; p < end; ++p)
                for (int i = 0; i < d; ++i) {
                    const double v = features[p * static_cast<std::size_t>(d) + i];
                    s[i] += v;
                    q[i] += v * v;
                }
        });
        for (int i = 0; i < d; ++i) {
            double s = 0.0, q = 0.0;
            for (std::size_t c = 0; c < kParallelChunks; ++c) {
                s += sums[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
                q += sumsqs[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
            }
            const double mean = s / static_cast<double>(P);
            const double sd =
                std::sqrt(std::max(0.0, q / static_cast<double>(P) - mean * mean));
            reg.lo[static_cast<std::size_t>(i)] = mean - est.range_sigmas * sd;
            reg.hi[static_cast<std::size_t>(i)] = mean + est.range_sigmas * sd;
        }
    }

    auto cell_of = [&](const double* x) {
        std::size_t cell = 0;
        for (int i = 0; i < d; ++i) {
            const double lo = reg.lo[static_cast<std::size_t>(i)];
            const double hi = reg.hi[static_cast<std::size_t>(i)];
            int idx = 0;
            if (hi > lo) {
                idx = static_cast<int>((x[i] - lo) / (hi - lo) * B);
                idx = std::clamp(idx, 0, B - 1);
            }
            cell = cell * static_cast<std::size_t>(B) + static_cast<std::size_t>(idx);
        }
        return cell;
    };

    std::vector<double> cell_sums(kParallelChunks * n_cells, 0.0);
    std::vector<std::size_t> cell_counts(kParallelChunks * n_cells, 0);
    parallel_chunks(P, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        double* s = cell_sums.data() + chunk * n_cells;
        std::size_t* c = cell_counts.data() + chunk * n_cells;
        for (std::size_t p = begin; p < end; ++p) {
            const std::size_t cell = cell_of(features + p * static_cast<std::size_t>(d));
            s[cell] += responses[p];
            c[cell] += 1;
        }
    });

    reg.cell_values.assign(n_cells, 0.0);
    std::vector<std::size_t> counts(n_cells, 0);
    for (std::size_t c = 0; c < kParallelChunks; ++c)
        for (std::size_t j = 0; j < n_cells; ++j) {
            reg.cell_values[j] += cell_sums[c * n_cells + j];
            counts[j] += cell_counts[c * n_cells + j];
        }
    for (std::size_t j = 0; j < n_cells; ++j)
        if (counts[j] > 0) reg.cell_values[j] /= static_cast<double>(counts[j]);

    // empty cells inherit the nearest nonempty cell along the grid
    // (multi-source BFS in L1 distance; ties resolved by scan order)
    bool any_empty = false;
    for (std::size_t j = 0; j < n_cells; ++j)
        if (counts[j] == 0) { any_empty = true; break; }
    if (any_empty) {
        std::deque<std::size_t> queue;
        std::vector<char> filled(n_cells, 0);
        for (std::size_t j = 0; j < n_cells; ++j)
            if (counts[j] > 0) {
                filled[j] = 1;
                queue.push_back(j);
            }
        if (queue.empty()) throw SpecError("partitioning fit needs at least one row");
        std::vector<std::size_t> strides(static_cast<std::size_t>(d), 1);
        for (int i = d - 2; i >= 0; --i)
            strides[static_cast<std::size_t>(i)] =
                strides[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(B);
        while (!queue.empty()) {
            const std::size_t j = queue.front();
            queue.pop_front();
            std::size_t rem = j;
            for (int i = 0; i < d; ++i) {
                const std::size_t stride = strides[static_cast<std::size_t>(i)];
                const int coord = static_cast<int>(rem / stride) % B;
                rem %= stride;
                for (int dir = -1; dir <= 1; dir += 2) {
                    const int nb = coord + dir;
                    if (nb < 0 || nb >= B) continue;
                    const std::size_t jn = j + static_cast<std::size_t>(dir) * stride;
                    if (!filled[jn]) {
                        filled[jn] = 1;
                        reg.cell_values[jn] = reg.cell_values[j];
                        queue.push_back(jn);
                    }
                }
            }
        }
    }
    return reg;
}

} // namespace

FittedRegression fit(const double* features, std::size_t P, int d,
                     std::span<const double> responses, const EstimatorSpec& est,
                     int threads) {
    if (responses.size() != P) throw SpecError("responses must have one entry per row");
    if (P == 0) throw SpecError("fit needs at least one row");
    for (std::size_t p = 0; p < P; ++p)
        if (!std::isfinite(responses[p]))
            throw NumericalError("non-finite response at row " + std::to_string(p));
    if (est.kind == EstimatorKind::GlobalLeastSquares)
        return fit_global(features, P, d, responses, est, threads);
    return fit_partition(features, P, d, responses, est, threads);
}

double FittedRegression::predict(std::span<const double> x) const {
    if (kind == EstimatorKind::GlobalLeastSquares) {
        double xstd[32];
        for (int i = 0; i < d; ++i)
            xstd[i] = (x[static_cast<std::size_t>(i)] - shift[static_cast<std::size_t>(i)]) /
                      scale[static_cast<std::size_t>(i)];
        double v = 0.0;
        for (std::size_t j = 0; j < powers.size(); ++j)
            v += coeffs[j] * eval_basis(powers[j], xstd);
        return v;
    }
    std::size_t cell = 0;
    for (int i = 0; i < d; ++i) {
        const double l = lo[static_cast<std::size_t>(i)];
        const double h = hi[static_cast<std::size_t>(i)];
        int idx = 0;
        if (h > l) {
            idx = static_cast<int>((x[static_cast<std::size_t>(i)] - l) / (h - l) *
                                   bins);
            idx = std::clamp(idx, 0, bins - 1);
        }
        cell = cell * static_cast<std::size_t>(bins) + static_cast<std::size_t>(idx);
    }
    return cell_values[cell];
}

nlohmann::json FittedRegression::to_json() const {
    nlohmann::json j;
    if (kind == EstimatorKind::GlobalLeastSquares) {
        j["kind"] = "global-least-squares";
        j["d"] = d;
        j["degree"] = degree;
        j["shift"] = shift;
        j["scale"] = scale;
        j["coeffs"] = coeffs;
        j["rank"] = rank;
        j["rank_deficient"] = rank_deficient;
    } else {
        j["kind"] = "local-partitioning";
        j["d"] = d;
        j["bins"] = bins;
        j["lo"] = lo;
        j["hi"] = hi;
        j["cells"] = cell_values;
    }
    return j;
}

FittedRegression FittedRegression::from_json(const nlohmann::json& j) {
    FittedRegression reg;
    const std::string kind = j.at("kind").get<std::string>();
    reg.d = j.at("d").get<int>();
    if (kind == "global-least-squares") {
        reg.kind = EstimatorKind::GlobalLeastSquares;
        reg.degree = j.at("degree").get<int>();
        reg.shift = j.at("shift").get<std::vector<double>>();
        reg.scale = j.at("scale").get<std::vector<double>>();
        reg.coeffs = j.at("coeffs").get<std::vector<double>>();
        reg.rank = j.at("rank").get<int>();
        reg.rank_deficient = j.at("rank_deficient").get<bool>();
        reg.powers = basis_powers(reg.d, reg.degree);
    } else if (kind == "local-partitioning") {
        reg.kind = EstimatorKind::LocalPartitioning;
        reg.bins = j.at("bins").get<int>();
        reg.lo = j.at("lo").get<std::vector<double>>();
        reg.hi = j.at("hi").get<std::vector<double>>();
        reg.cell_values = j.at("cells").get<std::vector<double>>();
    } else {
        throw SpecError("unknown fitted-regression kind '" + kind + "'");
    }
    return reg;
}

} // namespace bsdelab
