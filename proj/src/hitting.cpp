#include "circuits/hitting.hpp"

#include "parallel.hpp"

#include <algorithm>

namespace circuits {

namespace {

// Deduplicated sets, each sorted; drops supersets of other stored sets
// (they are hit whenever the subset is).
std::vector<std::vector<ComponentId>> normalized_sets(const BlockingSetStore& store) {
  std::vector<std::vector<ComponentId>> sets;
  for (const auto& s : store.sets) {
    if (s.empty()) throw InputError("mhs: an empty blocking set cannot be hit");
    sets.emplace_back(s.begin(), s.end());
  }
  std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  std::vector<std::vector<ComponentId>> kept;
  for (const auto& s : sets) {
    bool dominated = false;
    for (const auto& k : kept) {
      if (std::includes(s.begin(), s.end(), k.begin(), k.end())) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(s);
  }
  return kept;
}

struct MhsSearch {
  const std::vector<std::vector<ComponentId>>& sets;
  std::vector<ComponentId> best;

  bool hits(const std::vector<ComponentId>& chosen, const std::vector<ComponentId>& s) const {
    for (const auto& e : s) {
      if (std::binary_search(chosen.begin(), chosen.end(), e)) return true;
    }
    return false;
  }

  // Greedy packing of pairwise-disjoint unhit sets lower-bounds the
  // number of further elements needed.
  std::size_t lower_bound(const std::vector<ComponentId>& chosen) const {
    std::vector<ComponentId> used;
    std::size_t lb = 0;
    for (const auto& s : sets) {
      if (hits(chosen, s)) continue;
      bool disjoint = true;
      for (const auto& e : s) {
        if (std::binary_search(used.begin(), used.end(), e)) {
          disjoint = false;
          break;
        }
      }
      if (!disjoint) continue;
      ++lb;
      for (const auto& e : s) used.insert(std::lower_bound(used.begin(), used.end(), e), e);
    }
    return lb;
  }

  void recurse(std::vector<ComponentId>& chosen) {
    const std::vector<ComponentId>* smallest = nullptr;
    for (const auto& s : sets) {
      if (hits(chosen, s)) continue;
      if (!smallest || s.size() < smallest->size()) smallest = &s;
    }
    if (!smallest) {
      if (chosen.size() < best.size()) best = chosen;
      return;
    }
    if (chosen.size() + std::max<std::size_t>(lower_bound(chosen), 1) >= best.size()) return;
    for (const auto& e : *smallest) {
      auto at = std::lower_bound(chosen.begin(), chosen.end(), e);
      chosen.insert(at, e);
      recurse(chosen);
      chosen.erase(std::find(chosen.begin(), chosen.end(), e));
    }
  }
};

}  // namespace

HittingSet mhs(const BlockingSetStore& store) {
  HittingSet result;
  result.optimal = true;
  if (store.sets.empty()) return result;

  const auto sets = normalized_sets(store);

  // Greedy incumbent: element covering the most unhit sets, lexicographic ties.
  std::vector<ComponentId> incumbent;
  {
    std::vector<bool> hit(sets.size(), false);
    while (true) {
      std::map<ComponentId, int> gain;
      bool all_hit = true;
      for (std::size_t i = 0; i < sets.size(); ++i) {
        if (hit[i]) continue;
        all_hit = false;
        for (const auto& e : sets[i]) ++gain[e];
      }
      if (all_hit) break;
      ComponentId pick = gain.begin()->first;
      int best_gain = 0;
      for (const auto& [e, g] : gain) {
        if (g > best_gain) {
          best_gain = g;
          pick = e;
        }
      }
      incumbent.push_back(pick);
      for (std::size_t i = 0; i < sets.size(); ++i) {
        if (!hit[i] && std::find(sets[i].begin(), sets[i].end(), pick) != sets[i].end()) {
          hit[i] = true;
        }
      }
    }
    std::sort(incumbent.begin(), incumbent.end());
  }

  MhsSearch search{sets, incumbent};
  std::vector<ComponentId> chosen;
  search.recurse(chosen);
  result.members.insert(search.best.begin(), search.best.end());
  return result;
}

namespace {

std::vector<std::set<ComponentId>> size_t_candidates(const std::vector<ComponentId>& universe,
                                                     int t,
                                                     const std::vector<std::set<ComponentId>>& stored) {
  std::vector<std::set<ComponentId>> out;
  const int n = static_cast<int>(universe.size());
  if (t > n) return out;
  std::vector<int> idx(t);
  for (int i = 0; i < t; ++i) idx[i] = i;
  while (true) {
    std::set<ComponentId> s;
    for (int i : idx) s.insert(universe[i]);
    bool skip = false;
    for (const auto& u : stored) {
      if (std::includes(s.begin(), s.end(), u.begin(), u.end())) {
        skip = true;  // already known to block: supersets carry no news
        break;
      }
    }
    if (!skip) out.push_back(std::move(s));
    int i = t - 1;
    while (i >= 0 && idx[i] == n - t + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < t; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace

Alg4Result algorithm4(const Predicate& pred, int t_max) {
  Alg4Result res;
  const auto universe = pred.universe();
  const int n = static_cast<int>(universe.size());
  if (t_max < 1 || t_max > n) {
    throw InputError("algorithm4: t_max must lie in [1, |G|]");
  }
  res.monotone_guaranteed = is_monotone_certificate(pred) == MonotoneCertificate::Guaranteed;
  res.store.universe = universe;
  const std::set<ComponentId> full(universe.begin(), universe.end());

  for (int t = 1; t <= t_max; ++t) {
    const auto candidates = size_t_candidates(universe, t, res.store.sets);
    std::vector<char> blocked(candidates.size(), 0);
    detail::parallel_for(static_cast<long>(candidates.size()), [&](long i) {
      std::set<ComponentId> rest = full;
      for (const auto& e : candidates[i]) rest.erase(e);
      // Only certainly-blocking sets are stored; Unknown stays out.
      blocked[i] = eval(pred, rest) == TriBool::False ? 1 : 0;
    });
    res.evals += static_cast<long>(candidates.size());

    Alg4Round round;
    round.t = t;
    round.candidates = static_cast<long>(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (blocked[i]) {
        res.store.sets.push_back(candidates[i]);
        ++round.blocked;
      }
    }
    round.store_size = res.store.sets.size();

    const HittingSet hs = mhs(res.store);
    round.mhs_size = hs.members.size();
    res.rounds.push_back(round);
    res.circuit = hs.members;

    ++res.evals;
    if (eval(pred, hs.members) == TriBool::True) {
      res.status = Alg4Status::Exact;
      res.empty_circuit = hs.members.empty();
      return res;
    }
  }
  res.status = Alg4Status::LowerBoundOnly;
  return res;
}

}  // namespace circuits
