#include "adseal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "adseal/errors.hpp"
#include "adseal/rng.hpp"

namespace adseal {

namespace {

void sort_ranking(std::vector<ScoredAd>& scored) {
  std::sort(scored.begin(), scored.end(), [](const ScoredAd& a, const ScoredAd& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ad_id < b.ad_id;
  });
}

// Solves A x = b for symmetric positive definite A (in place Cholesky).
std::vector<double> spd_solve(Matrix a, std::vector<double> b) {
  const int n = a.rows;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < j; ++k) {
      const double l = a.at(j, k);
      for (int i = j; i < n; ++i) a.at(i, j) -= a.at(i, k) * l;
    }
    const double d = a.at(j, j);
    if (d <= 0.0) throw Error("spd_solve: matrix not positive definite");
    const double root = std::sqrt(d);
    for (int i = j; i < n; ++i) a.at(i, j) /= root;
  }
  // forward: L y = b
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) b[i] -= a.at(i, k) * b[k];
    b[i] /= a.at(i, i);
  }
  // backward: L^T x = y
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) b[i] -= a.at(k, i) * b[k];
    b[i] /= a.at(i, i);
  }
  return b;
}

// One ALS half-sweep: rows of `target` solve against `fixed` factors.
void als_solve_side(Matrix& target, const Matrix& fixed, const Matrix& ratings,
                    bool transpose_ratings, double lambda) {
  const int f = fixed.cols;
  Matrix gram(f, f);
  for (int i = 0; i < fixed.rows; ++i)
    for (int p = 0; p < f; ++p)
      for (int q = 0; q < f; ++q) gram.at(p, q) += fixed.at(i, p) * fixed.at(i, q);
  for (int p = 0; p < f; ++p) gram.at(p, p) += lambda;

  for (int r = 0; r < target.rows; ++r) {
    std::vector<double> rhs(f, 0.0);
    for (int i = 0; i < fixed.rows; ++i) {
      const double rating = transpose_ratings ? ratings.at(i, r) : ratings.at(r, i);
      if (rating == 0.0) continue;
      for (int p = 0; p < f; ++p) rhs[p] += rating * fixed.at(i, p);
    }
    const auto x = spd_solve(gram, std::move(rhs));
    for (int p = 0; p < f; ++p) target.at(r, p) = x[p];
  }
}

double als_objective(const Matrix& ratings, const Matrix& x, const Matrix& y, double lambda) {
  double obj = 0.0;
  for (int u = 0; u < ratings.rows; ++u) {
    for (int a = 0; a < ratings.cols; ++a) {
      double pred = 0.0;
      for (int p = 0; p < x.cols; ++p) pred += x.at(u, p) * y.at(a, p);
      const double d = ratings.at(u, a) - pred;
      obj += d * d;
    }
  }
  for (double v : x.data) obj += lambda * v * v;
  for (double v : y.data) obj += lambda * v * v;
  return obj;
}

}  // namespace

AlsFactors als_factorize(const Matrix& ratings, int factors, double lambda, int sweeps,
                         uint64_t seed) {
  if (ratings.rows == 0 || ratings.cols == 0) {
    throw DataError("als_factorize: empty ratings matrix");
  }
  AlsFactors out;
  Rng rng(seed);
  out.user_factors = Matrix::randn(ratings.rows, factors, 0.1, rng);
  out.item_factors = Matrix::randn(ratings.cols, factors, 0.1, rng);
  for (int s = 0; s < sweeps; ++s) {
    als_solve_side(out.user_factors, out.item_factors, ratings, false, lambda);
    als_solve_side(out.item_factors, out.user_factors, ratings, true, lambda);
    out.objective_per_sweep.push_back(
        als_objective(ratings, out.user_factors, out.item_factors, lambda));
  }
  return out;
}

std::vector<ScoredAd> recommend_random(const std::vector<AdCreative>& catalog, int k,
                                       uint64_t seed) {
  if (catalog.empty()) throw DataError("recommend_random: empty catalog");
  Rng rng(seed);
  std::vector<ScoredAd> scored;
  scored.reserve(catalog.size());
  for (const auto& ad : catalog) scored.push_back(ScoredAd{ad.ad_id, rng.uniform()});
  sort_ranking(scored);
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

std::vector<ScoredAd> recommend_content(const UserProfile& profile,
                                        const EmbeddedCatalog& catalog, int k, uint64_t seed) {
  if (catalog.ads.empty()) throw DataError("recommend_content: empty catalog");

  Matrix mean;
  int clicked = 0;
  for (const auto& e : profile.events) {
    if (!e.clicked) continue;
    const AdEmbedding* emb = catalog.find(e.ad_id);
    if (!emb) continue;
    if (clicked == 0) {
      mean = emb->vector;
    } else {
      mean = add(mean, emb->vector);
    }
    ++clicked;
  }
  if (clicked == 0 || l2_norm(mean) <= 1e-12) {
    return recommend_random(catalog.ads, k, seed);  // documented cold-start fallback
  }
  const Matrix user_vec = l2_normalize(scale(mean, 1.0 / clicked));

  std::vector<ScoredAd> scored;
  scored.reserve(catalog.ads.size());
  for (size_t i = 0; i < catalog.ads.size(); ++i) {
    scored.push_back(
        ScoredAd{catalog.ads[i].ad_id, dot_rows(user_vec, catalog.embeddings[i].vector)});
  }
  sort_ranking(scored);
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

EmbeddedCatalog token_mean_catalog(const std::vector<AdCreative>& catalog,
                                   const Vocabulary& vocab, int dim, uint64_t seed) {
  Rng rng(seed);
  const Matrix word_vectors = Matrix::randn(vocab.size(), dim, 1.0, rng);
  EmbeddedCatalog ec;
  ec.ads = catalog;
  for (size_t i = 0; i < catalog.size(); ++i) {
    std::vector<int> ids;
    for (const auto& w : split_words(catalog[i].copy)) ids.push_back(vocab.id(w));
    if (ids.empty()) ids.push_back(Vocabulary::kUnk);
    Matrix mean(1, dim);
    for (int id : ids) {
      for (int c = 0; c < dim; ++c) mean.at(0, c) += word_vectors.at(id, c);
    }
    mean = scale(mean, 1.0 / static_cast<double>(ids.size()));
    ec.embeddings.push_back(AdEmbedding{catalog[i].ad_id, l2_normalize(mean)});
    ec.by_ad_id[catalog[i].ad_id] = i;
  }
  return ec;
}

int AlsModel::user_index(const std::string& user_id) const {
  for (size_t i = 0; i < user_ids.size(); ++i)
    if (user_ids[i] == user_id) return static_cast<int>(i);
  return -1;
}

AlsModel fit_als(const std::vector<ImpressionEvent>& train_log,
                 const std::vector<AdCreative>& catalog, int factors, double lambda,
                 int sweeps, uint64_t seed) {
  if (train_log.empty() || catalog.empty()) {
    throw DataError("fit_als: empty interaction data");
  }
  AlsModel als;
  std::set<std::string> users;
  for (const auto& e : train_log) users.insert(e.user_id);
  als.user_ids.assign(users.begin(), users.end());
  for (const auto& ad : catalog) als.ad_ids.push_back(ad.ad_id);

  std::map<std::string, int> user_row, ad_col;
  for (size_t i = 0; i < als.user_ids.size(); ++i) user_row[als.user_ids[i]] = static_cast<int>(i);
  for (size_t i = 0; i < als.ad_ids.size(); ++i) ad_col[als.ad_ids[i]] = static_cast<int>(i);

  Matrix ratings(static_cast<int>(als.user_ids.size()), static_cast<int>(als.ad_ids.size()));
  std::map<std::string, int> clicks;
  for (const auto& e : train_log) {
    if (!e.clicked) continue;
    auto it = ad_col.find(e.ad_id);
    if (it == ad_col.end()) continue;
    ratings.at(user_row[e.user_id], it->second) = 1.0;
    ++clicks[e.ad_id];
  }

  for (const auto& ad : catalog) {
    als.popularity.push_back({ad.ad_id, clicks.count(ad.ad_id) ? clicks[ad.ad_id] : 0});
  }
  std::sort(als.popularity.begin(), als.popularity.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  AlsFactors factors_out = als_factorize(ratings, factors, lambda, sweeps, seed);
  als.user_factors = std::move(factors_out.user_factors);
  als.item_factors = std::move(factors_out.item_factors);
  als.objective_per_sweep = std::move(factors_out.objective_per_sweep);
  return als;
}

std::vector<ScoredAd> recommend_cf(const UserProfile& profile, const AlsModel& als, int k) {
  if (als.ad_ids.empty()) throw DataError("recommend_cf: empty model");
  const int u = als.user_index(profile.user_id);
  std::vector<ScoredAd> scored;
  if (u < 0) {
    // unseen user: popularity order, scores are click counts
    for (const auto& [ad_id, count] : als.popularity) {
      scored.push_back(ScoredAd{ad_id, static_cast<double>(count)});
    }
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    return scored;
  }
  for (size_t a = 0; a < als.ad_ids.size(); ++a) {
    double s = 0.0;
    for (int p = 0; p < als.user_factors.cols; ++p) {
      s += als.user_factors.at(u, p) * als.item_factors.at(static_cast<int>(a), p);
    }
    scored.push_back(ScoredAd{als.ad_ids[a], s});
  }
  sort_ranking(scored);
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

}  // namespace adseal
