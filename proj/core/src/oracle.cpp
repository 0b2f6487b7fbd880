#include "bnmarket/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include <json.hpp>

#include "bnmarket/error.hpp"

namespace bnmarket {

namespace {

std::vector<std::size_t> radices_of(const Schema& schema) {
  std::vector<std::size_t> r;
  for (std::size_t k = 0; k < schema.size(); ++k) r.push_back(schema.domain_size(k));
  return r;
}

// Distance between consecutive values of variable k in the flat index.
std::size_t stride_of(const Schema& schema, std::size_t k) {
  std::size_t s = 1;
  for (std::size_t j = k + 1; j < schema.size(); ++j) s *= schema.domain_size(j);
  return s;
}

void require_same_space(const JointTable& a, const JointTable& b) {
  if (!(a.schema() == b.schema())) {
    throw MarketError(ErrorCode::kBadSpec, "tables over different outcome spaces");
  }
}

}  // namespace

std::size_t JointTable::checked_size(const Schema& schema) {
  auto n = schema.outcome_count();
  if (!n || *n > kMaxOutcomes) {
    throw MarketError(ErrorCode::kSizeLimit, "outcome space exceeds 2^20 entries");
  }
  return static_cast<std::size_t>(*n);
}

JointTable::JointTable(SchemaPtr schema, Kind kind, std::vector<double> values)
    : schema_(std::move(schema)), kind_(kind), values_(std::move(values)) {
  if (values_.size() != checked_size(*schema_)) {
    throw MarketError(ErrorCode::kBadSpec, "joint table has the wrong size");
  }
  if (kind_ == Kind::kProbability) {
    double sum = 0.0;
    for (double p : values_) {
      if (!(p >= 0.0)) throw MarketError(ErrorCode::kBadSpec, "negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTolerance) {
      throw MarketError(ErrorCode::kBadSpec, "joint table does not sum to 1");
    }
  }
}

JointTable JointTable::filled(SchemaPtr schema, Kind kind, double value) {
  const std::size_t n = checked_size(*schema);
  return JointTable(std::move(schema), kind, std::vector<double>(n, value));
}

std::size_t JointTable::index_of(const Valuation& total) const {
  const auto r = radices_of(*schema_);
  return encode_mixed_radix(r, total.values());
}

Valuation JointTable::outcome(std::size_t index) const {
  const auto r = radices_of(*schema_);
  std::vector<int> digits(r.size());
  decode_mixed_radix(r, index, digits);
  return Valuation(std::move(digits));
}

JointTable densify(const BayesNet& bn) {
  const Schema& schema = bn.schema();
  const std::size_t n = JointTable::checked_size(schema);
  const auto r = radices_of(schema);
  std::vector<double> values(n);
  std::vector<int> digits(r.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Valuation v(digits);
    double p = 1.0;
    for (std::size_t k = 0; k < bn.size(); ++k) {
      const Cpt& cpt = bn.cpt(k);
      std::size_t ctx = 0;
      for (std::size_t j = 0; j < cpt.parents().size(); ++j) {
        ctx = ctx * cpt.parent_cards()[j] + static_cast<std::size_t>(digits[cpt.parents()[j]]);
      }
      p *= cpt.table()[ctx * cpt.cardinality() + static_cast<std::size_t>(digits[k])];
    }
    values[i] = p;
    next_combination(r, digits);
  }
  return JointTable(bn.dag().schema_ptr(), JointTable::Kind::kProbability,
                    std::move(values));
}

double oracle_cost(const JointTable& q, double b) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : q.values()) m = std::max(m, x / b);
  double s = 0.0;
  for (double x : q.values()) s += std::exp(x / b - m);
  return b * (m + std::log(s));
}

JointTable oracle_prices(const JointTable& q, double b) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : q.values()) m = std::max(m, x / b);
  std::vector<double> p(q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp(q[i] / b - m);
    s += p[i];
  }
  for (double& x : p) x /= s;
  return JointTable(q.schema_ptr(), JointTable::Kind::kProbability, std::move(p));
}

JointTable quantities_from_prices(const JointTable& prices, double b) {
  std::vector<double> q(prices.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = prices[i] > 0.0 ? b * std::log(prices[i])
                           : -std::numeric_limits<double>::infinity();
  }
  return JointTable(prices.schema_ptr(), JointTable::Kind::kQuantity, std::move(q));
}

std::vector<double> oracle_indicator(const CnfSecurity& f) {
  const Schema& schema = f.schema();
  const std::size_t n = JointTable::checked_size(schema);
  const auto r = radices_of(schema);
  std::vector<double> out(n);
  std::vector<int> digits(r.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f.evaluate(digits) ? 1.0 : 0.0;
    next_combination(r, digits);
  }
  return out;
}

OracleTrade oracle_trade(const JointTable& q, const CnfSecurity& f, double delta, double b) {
  const auto ind = oracle_indicator(f);
  std::vector<double> t(q.values());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += delta * b * ind[i];
  JointTable next(q.schema_ptr(), JointTable::Kind::kQuantity, std::move(t));
  const double cost = oracle_cost(next, b) - oracle_cost(q, b);
  return {std::move(next), cost};
}

JointTable oracle_logop(const JointTable& p1, double w1, const JointTable& p2, double w2) {
  require_same_space(p1, p2);
  std::vector<double> out(p1.size());
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto pw = [](double x, double w) {
      if (x == 0.0) return w == 0.0 ? 1.0 : 0.0;
      return std::pow(x, w);
    };
    out[i] = pw(p1[i], w1) * pw(p2[i], w2);
    s += out[i];
  }
  if (!(s > 0.0)) throw MarketError(ErrorCode::kNullEvent, "opinion pool is identically zero");
  for (double& x : out) x /= s;
  return JointTable(p1.schema_ptr(), JointTable::Kind::kProbability, std::move(out));
}

JointTable oracle_pr_f(const CnfSecurity& f) {
  auto ind = oracle_indicator(f);
  double s = 0.0;
  for (double& x : ind) {
    x = std::exp(x);
    s += x;
  }
  for (double& x : ind) x /= s;
  return JointTable(f.schema_ptr(), JointTable::Kind::kProbability, std::move(ind));
}

bool oracle_local_markov(const JointTable& p, const Dag& g, double tolerance) {
  const Schema& schema = p.schema();
  const auto r = radices_of(schema);
  std::vector<int> digits(r.size());
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto blanket = g.markov_blanket(k);
    const std::size_t l = schema.domain_size(k);
    const std::size_t stride = stride_of(schema, k);
    std::map<std::vector<int>, std::vector<double>> seen;
    for (std::size_t i = 0; i < p.size(); ++i) {
      decode_mixed_radix(r, i, digits);
      if (digits[k] != 0) continue;
      std::vector<double> row(l);
      double z = 0.0;
      for (std::size_t j = 0; j < l; ++j) {
        row[j] = p[i + j * stride];
        z += row[j];
      }
      if (!(z > 0.0)) continue;
      for (double& x : row) x /= z;
      std::vector<int> key;
      for (std::size_t b : blanket) key.push_back(digits[b]);
      auto [it, inserted] = seen.emplace(std::move(key), row);
      if (inserted) continue;
      for (std::size_t j = 0; j < l; ++j) {
        if (std::abs(it->second[j] - row[j]) > tolerance) return false;
      }
    }
  }
  return true;
}

double oracle_event_probability(const JointTable& p, const CnfSecurity& f) {
  const auto ind = oracle_indicator(f);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += ind[i] * p[i];
  return s;
}

double oracle_probability(const JointTable& p, const Valuation& event) {
  const auto r = radices_of(p.schema());
  std::vector<int> digits(r.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    decode_mixed_radix(r, i, digits);
    bool match = true;
    for (std::size_t k = 0; k < digits.size() && match; ++k) {
      match = !event.assigned(k) || event[k] == digits[k];
    }
    if (match) s += p[i];
  }
  return s;
}

std::vector<double> oracle_conditional(const JointTable& p, std::size_t target,
                                       const Valuation& evidence) {
  const auto r = radices_of(p.schema());
  std::vector<int> digits(r.size());
  std::vector<double> row(p.schema().domain_size(target), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    decode_mixed_radix(r, i, digits);
    bool match = true;
    for (std::size_t k = 0; k < digits.size() && match; ++k) {
      match = !evidence.assigned(k) || evidence[k] == digits[k];
    }
    if (match) row[static_cast<std::size_t>(digits[target])] += p[i];
  }
  double z = 0.0;
  for (double x : row) z += x;
  if (!(z > 0.0)) throw MarketError(ErrorCode::kNullEvent, "conditioning on null event");
  for (double& x : row) x /= z;
  return row;
}

BayesNet oracle_fit(const JointTable& p, DagPtr g) {
  const Schema& schema = p.schema();
  const auto r = radices_of(schema);
  std::vector<int> digits(r.size());
  std::vector<Cpt> cpts;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    Cpt shape = Cpt::uniform(*g, k);
    std::vector<double> table(shape.table().size(), 0.0);
    const std::size_t l = schema.domain_size(k);
    for (std::size_t i = 0; i < p.size(); ++i) {
      decode_mixed_radix(r, i, digits);
      std::size_t ctx = 0;
      for (std::size_t j = 0; j < shape.parents().size(); ++j) {
        ctx = ctx * shape.parent_cards()[j] + static_cast<std::size_t>(digits[shape.parents()[j]]);
      }
      table[ctx * l + static_cast<std::size_t>(digits[k])] += p[i];
    }
    for (std::size_t ctx = 0; ctx < shape.context_count(); ++ctx) {
      double z = 0.0;
      for (std::size_t j = 0; j < l; ++j) z += table[ctx * l + j];
      for (std::size_t j = 0; j < l; ++j) {
        table[ctx * l + j] = z > 0.0 ? table[ctx * l + j] / z : 1.0 / static_cast<double>(l);
      }
    }
    cpts.push_back(make_cpt(*g, k, std::move(table)));
  }
  return BayesNet(std::move(g), std::move(cpts));
}

double max_abs_difference(const JointTable& a, const JointTable& b) {
  require_same_space(a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double total_variation(const JointTable& a, const JointTable& b) {
  require_same_space(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::string to_golden(const JointTable& p) {
  std::string out = "[";
  char buf[64];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s[%zu, %.17g]", i ? ",\n " : "", i, p[i]);
    out += buf;
  }
  out += "]\n";
  return out;
}

JointTable from_golden(SchemaPtr schema, const std::string& text) {
  const std::size_t n = JointTable::checked_size(*schema);
  std::vector<double> values(n, 0.0);
  const auto doc = nlohmann::json::parse(text);
  for (const auto& entry : doc) {
    const auto index = entry.at(0).get<std::size_t>();
    if (index >= n) throw MarketError(ErrorCode::kBadSpec, "golden index out of range");
    values[index] = entry.at(1).get<double>();
  }
  return JointTable(std::move(schema), JointTable::Kind::kProbability, std::move(values));
}

}  // namespace bnmarket
