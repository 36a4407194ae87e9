#include "manac/env_abstract.hpp"

#include <Eigen/Dense>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "manac/policy.hpp"

namespace manac {

namespace {
constexpr double kErgodicityFloor = 1e-5;

void write_doubles(std::ostream& os, const char* name, const std::vector<double>& v) {
  os << name << ' ' << v.size() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << buf << (((i + 1) % 16 == 0) ? '\n' : ' ');
  }
  os << '\n';
}

std::vector<double> read_doubles(std::istream& is, const char* name) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != name)
    throw std::runtime_error("abstract mdp load: expected table '" + std::string(name) + "'");
  std::vector<double> v(count);
  for (auto& x : v)
    if (!(is >> x)) throw std::runtime_error("abstract mdp load: truncated table " + std::string(name));
  return v;
}
}  // namespace

long AbstractMdp::joint_index(const std::vector<int>& joint_action) const {
  long idx = 0;
  for (int i = 0; i < cfg_.num_agents; ++i) {
    const int a = joint_action[i];
    if (a < 0 || a >= cfg_.actions_per_agent)
      throw std::out_of_range("AbstractMdp: action index out of range");
    idx = idx * cfg_.actions_per_agent + a;
  }
  return idx;
}

std::vector<int> AbstractMdp::decode_joint(long index) const {
  std::vector<int> a(cfg_.num_agents);
  for (int i = cfg_.num_agents - 1; i >= 0; --i) {
    a[i] = static_cast<int>(index % cfg_.actions_per_agent);
    index /= cfg_.actions_per_agent;
  }
  return a;
}

double AbstractMdp::mean_reward_avg(int s, long a) const {
  double sum = 0.0;
  for (int i = 0; i < cfg_.num_agents; ++i) sum += mean_reward(i, s, a);
  return sum / cfg_.num_agents;
}

AbstractMdp AbstractMdp::generate(const AbstractMdpConfig& cfg, Rng& rng) {
  if (cfg.num_agents < 1 || cfg.num_states < 1)
    throw std::invalid_argument("AbstractMdp::generate: need at least one agent and state");
  if (cfg.actions_per_agent < 1) throw std::invalid_argument("AbstractMdp::generate: bad action count");

  AbstractMdp mdp;
  mdp.cfg_ = cfg;
  long joint = 1;
  for (int i = 0; i < cfg.num_agents; ++i) {
    joint *= cfg.actions_per_agent;
    if (joint > (1L << 40)) throw std::invalid_argument("AbstractMdp::generate: joint action space too large");
  }
  mdp.num_joint_actions_ = joint;

  const int s_count = cfg.num_states;
  mdp.p_.resize(static_cast<std::size_t>(s_count) * joint * s_count);
  for (int s = 0; s < s_count; ++s) {
    for (long a = 0; a < joint; ++a) {
      double* row = &mdp.p_[(static_cast<long>(s) * joint + a) * s_count];
      double sum = 0.0;
      for (int s2 = 0; s2 < s_count; ++s2) {
        row[s2] = rng.uniform() + kErgodicityFloor;
        sum += row[s2];
      }
      for (int s2 = 0; s2 < s_count; ++s2) row[s2] /= sum;
    }
  }

  mdp.r_.resize(static_cast<std::size_t>(cfg.num_agents) * s_count * joint);
  for (auto& x : mdp.r_) x = rng.uniform(0.0, 4.0);

  mdp.phi_.resize(static_cast<std::size_t>(s_count) * cfg.value_feature_dim);
  for (auto& x : mdp.phi_) x = rng.uniform();

  mdp.f_.resize(static_cast<std::size_t>(s_count) * joint * cfg.reward_feature_dim);
  for (auto& x : mdp.f_) x = rng.uniform();

  mdp.q_.resize(static_cast<std::size_t>(cfg.num_agents) * s_count * cfg.actions_per_agent *
                cfg.policy_feature_dim);
  for (auto& x : mdp.q_) x = rng.uniform();

  mdp.state_ = 0;
  return mdp;
}

void AbstractMdp::reset(Rng& rng) { state_ = rng.uniform_int(cfg_.num_states); }

Eigen::VectorXd AbstractMdp::phi(int s) const {
  return Eigen::Map<const Eigen::VectorXd>(&phi_[static_cast<long>(s) * cfg_.value_feature_dim],
                                           cfg_.value_feature_dim);
}

Eigen::VectorXd AbstractMdp::f(int s, long joint_index) const {
  return Eigen::Map<const Eigen::VectorXd>(
      &f_[(static_cast<long>(s) * num_joint_actions_ + joint_index) * cfg_.reward_feature_dim],
      cfg_.reward_feature_dim);
}

Eigen::MatrixXd AbstractMdp::q(int agent, int s) const {
  const int m = cfg_.policy_feature_dim;
  const int a_count = cfg_.actions_per_agent;
  Eigen::MatrixXd out(m, a_count);
  const double* base =
      &q_[((static_cast<long>(agent) * cfg_.num_states + s) * a_count) * m];
  for (int a = 0; a < a_count; ++a)
    out.col(a) = Eigen::Map<const Eigen::VectorXd>(base + static_cast<long>(a) * m, m);
  return out;
}

Eigen::VectorXd AbstractMdp::state_features() const { return phi(state_); }

Eigen::MatrixXd AbstractMdp::policy_features(int agent) const { return q(agent, state_); }

Eigen::VectorXd AbstractMdp::reward_features(const std::vector<int>& joint_action) const {
  return f(state_, joint_index(joint_action));
}

Eigen::VectorXd AbstractMdp::step(const std::vector<int>& joint_action, Rng& rng) {
  const long a = joint_index(joint_action);
  const double* row = &p_[(static_cast<long>(state_) * num_joint_actions_ + a) * cfg_.num_states];
  const int next = rng.categorical(row, cfg_.num_states);

  Eigen::VectorXd rewards(cfg_.num_agents);
  for (int i = 0; i < cfg_.num_agents; ++i)
    rewards[i] = rng.uniform(mean_reward(i, state_, a) - 0.5, mean_reward(i, state_, a) + 0.5);
  state_ = next;
  return rewards;
}

void AbstractMdp::set_transition_row(int s, long a, const Eigen::VectorXd& row) {
  if (row.size() != cfg_.num_states) throw std::invalid_argument("set_transition_row: bad size");
  if (std::abs(row.sum() - 1.0) > 1e-12) throw std::invalid_argument("set_transition_row: not stochastic");
  for (int s2 = 0; s2 < cfg_.num_states; ++s2)
    p_[(static_cast<long>(s) * num_joint_actions_ + a) * cfg_.num_states + s2] = row[s2];
}

void AbstractMdp::set_mean_reward(int agent, int s, long a, double value) {
  r_[(static_cast<long>(agent) * cfg_.num_states + s) * num_joint_actions_ + a] = value;
}

void AbstractMdp::set_q(int agent, int s, const Eigen::MatrixXd& features) {
  const int m = cfg_.policy_feature_dim;
  if (features.rows() != m || features.cols() != cfg_.actions_per_agent)
    throw std::invalid_argument("set_q: bad shape");
  double* base = &q_[((static_cast<long>(agent) * cfg_.num_states + s) * cfg_.actions_per_agent) * m];
  for (int a = 0; a < cfg_.actions_per_agent; ++a)
    for (int k = 0; k < m; ++k) base[static_cast<long>(a) * m + k] = features(k, a);
}

void AbstractMdp::scale_q(double factor) {
  for (auto& x : q_) x *= factor;
}

void AbstractMdp::save(std::ostream& os) const {
  os << "manac-abstract-mdp v1\n";
  os << "agents " << cfg_.num_agents << "\nstates " << cfg_.num_states << "\nactions_per_agent "
     << cfg_.actions_per_agent << "\npolicy_dim " << cfg_.policy_feature_dim << "\nvalue_dim "
     << cfg_.value_feature_dim << "\nreward_dim " << cfg_.reward_feature_dim << '\n';
  write_doubles(os, "P", p_);
  write_doubles(os, "R", r_);
  write_doubles(os, "PHI", phi_);
  write_doubles(os, "F", f_);
  write_doubles(os, "Q", q_);
}

AbstractMdp AbstractMdp::load(std::istream& is) {
  std::string magic, version;
  if (!(is >> magic >> version) || magic != "manac-abstract-mdp" || version != "v1")
    throw std::runtime_error("abstract mdp load: unrecognized header");

  AbstractMdpConfig cfg;
  auto read_field = [&is](const char* name, int& out) {
    std::string tag;
    if (!(is >> tag >> out) || tag != name)
      throw std::runtime_error("abstract mdp load: expected field '" + std::string(name) + "'");
  };
  read_field("agents", cfg.num_agents);
  read_field("states", cfg.num_states);
  read_field("actions_per_agent", cfg.actions_per_agent);
  read_field("policy_dim", cfg.policy_feature_dim);
  read_field("value_dim", cfg.value_feature_dim);
  read_field("reward_dim", cfg.reward_feature_dim);

  AbstractMdp mdp;
  mdp.cfg_ = cfg;
  mdp.num_joint_actions_ = 1;
  for (int i = 0; i < cfg.num_agents; ++i) mdp.num_joint_actions_ *= cfg.actions_per_agent;
  mdp.p_ = read_doubles(is, "P");
  mdp.r_ = read_doubles(is, "R");
  mdp.phi_ = read_doubles(is, "PHI");
  mdp.f_ = read_doubles(is, "F");
  mdp.q_ = read_doubles(is, "Q");

  const long joint = mdp.num_joint_actions_;
  const long s_count = cfg.num_states;
  if (static_cast<long>(mdp.p_.size()) != s_count * joint * s_count ||
      static_cast<long>(mdp.r_.size()) != cfg.num_agents * s_count * joint ||
      static_cast<long>(mdp.phi_.size()) != s_count * cfg.value_feature_dim ||
      static_cast<long>(mdp.f_.size()) != s_count * joint * cfg.reward_feature_dim ||
      static_cast<long>(mdp.q_.size()) !=
          static_cast<long>(cfg.num_agents) * s_count * cfg.actions_per_agent * cfg.policy_feature_dim)
    throw std::runtime_error("abstract mdp load: table sizes inconsistent with header");
  return mdp;
}

void AbstractMdp::save_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("abstract mdp save: cannot open " + path);
  save(os);
}

AbstractMdp AbstractMdp::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("abstract mdp load: cannot open " + path);
  return load(is);
}

// ---------- oracle ----------

namespace {
void check_oracle_size(const AbstractMdp& mdp) {
  if (static_cast<long>(mdp.config().num_states) * mdp.num_joint_actions() > kOracleJointCap)
    throw std::invalid_argument("oracle: instance above the |S|*|A| cap");
}
}  // namespace

std::vector<Eigen::MatrixXd> policy_tables(const AbstractMdp& mdp,
                                           const std::vector<Eigen::VectorXd>& thetas) {
  const int n = mdp.config().num_agents;
  const int s_count = mdp.config().num_states;
  const int per = mdp.config().actions_per_agent;
  if (static_cast<int>(thetas.size()) != n) throw std::invalid_argument("policy_tables: theta count");
  std::vector<Eigen::MatrixXd> tables(n, Eigen::MatrixXd(per, s_count));
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < s_count; ++s)
      tables[i].col(s) = action_probabilities(thetas[i], mdp.q(i, s));
  return tables;
}

namespace {
// P^theta(s'|s) and the joint policy per state.
struct InducedChain {
  Eigen::MatrixXd p_theta;               // S x S
  std::vector<Eigen::VectorXd> pi_joint; // per state, length |A|
  Eigen::VectorXd r_bar;                 // S, averaged over actions under pi
  Eigen::MatrixXd r_bar_sa;              // S x A, (1/n) sum_i R^i
};

InducedChain induced_chain(const AbstractMdp& mdp, const std::vector<Eigen::VectorXd>& thetas) {
  check_oracle_size(mdp);
  const int s_count = mdp.config().num_states;
  const long joint = mdp.num_joint_actions();
  const int n = mdp.config().num_agents;
  const int per = mdp.config().actions_per_agent;
  const auto tables = policy_tables(mdp, thetas);

  InducedChain chain;
  chain.p_theta = Eigen::MatrixXd::Zero(s_count, s_count);
  chain.pi_joint.resize(s_count);
  chain.r_bar = Eigen::VectorXd::Zero(s_count);
  chain.r_bar_sa = Eigen::MatrixXd::Zero(s_count, joint);

  for (int s = 0; s < s_count; ++s) {
    Eigen::VectorXd pi(joint);
    for (long a = 0; a < joint; ++a) {
      double p = 1.0;
      long rest = a;
      for (int i = n - 1; i >= 0; --i) {
        p *= tables[i](static_cast<int>(rest % per), s);
        rest /= per;
      }
      pi[a] = p;
      double rbar = 0.0;
      for (int i = 0; i < n; ++i) rbar += mdp.mean_reward(i, s, a);
      rbar /= n;
      chain.r_bar_sa(s, a) = rbar;
      chain.r_bar[s] += p * rbar;
      for (int s2 = 0; s2 < s_count; ++s2) chain.p_theta(s, s2) += p * mdp.transition(s, a, s2);
    }
    chain.pi_joint[s] = std::move(pi);
  }
  return chain;
}

Eigen::VectorXd stationary_of(const Eigen::MatrixXd& p_theta) {
  const int s_count = static_cast<int>(p_theta.rows());
  // Solve d^T P = d^T with sum(d) = 1: replace one balance equation by the
  // normalization to make the system square and nonsingular for ergodic chains.
  Eigen::MatrixXd a = p_theta.transpose() - Eigen::MatrixXd::Identity(s_count, s_count);
  a.row(s_count - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s_count);
  b[s_count - 1] = 1.0;
  Eigen::VectorXd d = a.fullPivLu().solve(b);
  const double residual = (p_theta.transpose() * d - d).norm();
  if (residual > 1e-10 || !d.allFinite())
    throw std::runtime_error("stationary_distribution: solve residual too large (non-ergodic chain?)");
  return d;
}
}  // namespace

Eigen::VectorXd stationary_distribution(const AbstractMdp& mdp,
                                        const std::vector<Eigen::VectorXd>& thetas) {
  return stationary_of(induced_chain(mdp, thetas).p_theta);
}

double exact_objective(const AbstractMdp& mdp, const std::vector<Eigen::VectorXd>& thetas) {
  const InducedChain chain = induced_chain(mdp, thetas);
  const Eigen::VectorXd d = stationary_of(chain.p_theta);
  return d.dot(chain.r_bar);
}

OracleReport oracle_report(const AbstractMdp& mdp, const std::vector<Eigen::VectorXd>& thetas) {
  const int s_count = mdp.config().num_states;
  const long joint = mdp.num_joint_actions();
  const int n = mdp.config().num_agents;
  const int per = mdp.config().actions_per_agent;

  const InducedChain chain = induced_chain(mdp, thetas);
  OracleReport rep;
  rep.d = stationary_of(chain.p_theta);
  rep.j = rep.d.dot(chain.r_bar);

  // Average-reward Poisson equation (I - P^theta) V = r_bar - J 1, pinned by
  // the d-weighted mean of V being zero.
  Eigen::MatrixXd a(s_count + 1, s_count);
  a.topRows(s_count) = Eigen::MatrixXd::Identity(s_count, s_count) - chain.p_theta;
  a.row(s_count) = rep.d.transpose();
  Eigen::VectorXd b(s_count + 1);
  b.head(s_count) = chain.r_bar - Eigen::VectorXd::Constant(s_count, rep.j);
  b[s_count] = 0.0;
  rep.v = a.colPivHouseholderQr().solve(b);
  rep.poisson_residual =
      (chain.r_bar - Eigen::VectorXd::Constant(s_count, rep.j) + chain.p_theta * rep.v - rep.v).norm();

  rep.q.resize(s_count, joint);
  for (int s = 0; s < s_count; ++s)
    for (long act = 0; act < joint; ++act) {
      double next = 0.0;
      for (int s2 = 0; s2 < s_count; ++s2) next += mdp.transition(s, act, s2) * rep.v[s2];
      rep.q(s, act) = chain.r_bar_sa(s, act) - rep.j + next;
    }

  const auto tables = policy_tables(mdp, thetas);
  rep.grad.assign(n, Eigen::VectorXd());
  rep.fisher.assign(n, Eigen::MatrixXd());
  for (int i = 0; i < n; ++i) {
    const int m = mdp.config().policy_feature_dim;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(m, m);
    for (int s = 0; s < s_count; ++s) {
      const Eigen::MatrixXd feats = mdp.q(i, s);
      const Eigen::VectorXd probs = tables[i].col(s);
      std::vector<Eigen::VectorXd> psi(per);
      for (int ai = 0; ai < per; ++ai) {
        psi[ai] = compatible_features_from_probs(probs, feats, ai);
        fisher += rep.d[s] * probs[ai] * (psi[ai] * psi[ai].transpose());
      }
      for (long act = 0; act < joint; ++act) {
        // agent i's own action inside the joint index
        long rest = act;
        for (int k = n - 1; k > i; --k) rest /= per;
        const int ai = static_cast<int>(rest % per);
        const double adv = rep.q(s, act) - rep.v[s];
        grad += rep.d[s] * chain.pi_joint[s][act] * adv * psi[ai];
      }
    }
    rep.grad[i] = std::move(grad);
    rep.fisher[i] = std::move(fisher);
  }
  return rep;
}

Eigen::VectorXd exact_gradient(const AbstractMdp& mdp, const std::vector<Eigen::VectorXd>& thetas,
                               int agent) {
  return oracle_report(mdp, thetas).grad.at(agent);
}

Eigen::VectorXd relative_value(const Eigen::VectorXd& v_i, const AbstractMdp& mdp) {
  const int s_count = mdp.config().num_states;
  Eigen::VectorXd out(s_count);
  for (int s = 0; s < s_count; ++s) out[s] = v_i.dot(mdp.phi(s));
  return out;
}

}  // namespace manac
