#include "taac/nets.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "taac/errors.hpp"

namespace taac {

namespace {

std::vector<std::size_t> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<std::size_t> w{static_cast<std::size_t>(in)};
  for (int h : hidden) w.push_back(static_cast<std::size_t>(h));
  w.push_back(static_cast<std::size_t>(out));
  return w;
}

void check_group(const char* who, const Tensor& obs, std::size_t group, int obs_dim) {
  if (obs.cols() != static_cast<std::size_t>(obs_dim)) {
    throw std::invalid_argument(std::string(who) + ": observation width " + std::to_string(obs.cols()) +
                                " but network expects " + std::to_string(obs_dim));
  }
  if (group == 0 || obs.rows() % group != 0) {
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(obs.rows()) +
                                " rows do not form groups of " + std::to_string(group));
  }
}

}  // namespace

void ArchConfig::validate() const {
  auto fail = [](const char* key, const std::string& msg) { throw ConfigError(std::string("arch.") + key, msg); };
  if (obs_dim <= 0) fail("obs_dim", "must be positive");
  if (action_count <= 0) fail("action_count", "must be positive");
  if (d_model <= 0) fail("d_model", "must be positive");
  if (actor_heads <= 0 || d_model % actor_heads != 0) fail("actor_heads", "must divide d_model");
  if (critic_heads <= 0 || d_model % critic_heads != 0) fail("critic_heads", "must divide d_model");
  for (int h : embed_hidden)
    if (h <= 0) fail("embed_hidden", "widths must be positive");
  for (int h : post_hidden)
    if (h <= 0) fail("post_hidden", "widths must be positive");
  for (int h : ppo_hidden)
    if (h <= 0) fail("ppo_hidden", "widths must be positive");
  if (!(logit_init_gain > 0.0)) fail("logit_init_gain", "must be positive");
  if (!(input_scale > 0.0)) fail("input_scale", "must be positive");
}

std::string ArchConfig::hash() const {
  std::ostringstream os;
  os.precision(17);
  auto list = [&os](const std::vector<int>& v) {
    os << '[';
    for (int x : v) os << x << ',';
    os << ']';
  };
  os << "obs=" << obs_dim << ";act=" << action_count << ";d=" << d_model << ";ha=" << actor_heads
     << ";hq=" << critic_heads << ";embed=";
  list(embed_hidden);
  os << ";post=";
  list(post_hidden);
  os << ";ppo=";
  list(ppo_hidden);
  os << ";act_fn=" << to_string(activation) << ";gain=" << logit_init_gain << ";in_scale=" << input_scale;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- actor ----------------------------------------------------------------

ActorNet::ActorNet(const ArchConfig& arch, bool attention_enabled, Rng& rng)
    : arch_(arch), attention_enabled_(attention_enabled) {
  arch_.validate();
  embed_ = Mlp(widths(arch_.obs_dim, arch_.embed_hidden, arch_.d_model), arch_.activation, arch_.activation, rng);
  attention_ = MultiHeadAttention(static_cast<std::size_t>(arch_.d_model),
                                  static_cast<std::size_t>(arch_.actor_heads), rng);
  post_ = Mlp(widths(arch_.d_model, arch_.post_hidden, arch_.action_count), arch_.activation,
              Activation::identity, rng);
  if (arch_.logit_init_gain != 1.0) {
    for (double& w : post_.layers().back().weight.mutable_data()) w *= arch_.logit_init_gain;
  }
}

ActorOutput ActorNet::forward(const Tensor& obs, std::size_t group) const {
  check_group("ActorNet", obs, group, arch_.obs_dim);
  ActorOutput out;
  Tensor m = embed_.forward(scale(obs, arch_.input_scale));
  if (attention_enabled_) {
    auto att = attention_.forward(m, group);
    out.embeddings = att.concat;
    out.attention = std::move(att.weights);
  } else {
    out.embeddings = m;
  }
  out.logits = post_.forward(out.embeddings);
  out.log_probs = log_softmax_rows(out.logits);
  out.probs = softmax_rows(out.logits);
  return out;
}

NamedParams ActorNet::parameters() const {
  NamedParams p;
  embed_.collect("actor/embed", p);
  if (attention_enabled_) attention_.collect("actor/attention", p);
  post_.collect("actor/post", p);
  return p;
}

// ---- critic ---------------------------------------------------------------

CriticNet::CriticNet(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  arch_.validate();
  embed_ = Mlp(widths(arch_.obs_dim + arch_.action_count, arch_.embed_hidden, arch_.d_model), arch_.activation,
               arch_.activation, rng);
  attention_ = MultiHeadAttention(static_cast<std::size_t>(arch_.d_model),
                                  static_cast<std::size_t>(arch_.critic_heads), rng);
  post_ = Mlp(widths(arch_.d_model + static_cast<int>(attention_.out_width()), arch_.post_hidden, 1),
              arch_.activation, Activation::identity, rng);
}

Tensor critic_input(const Tensor& obs, std::span<const int> actions, int action_count) {
  if (actions.size() != obs.rows()) {
    throw std::invalid_argument("critic_input: " + std::to_string(actions.size()) + " actions for " +
                                std::to_string(obs.rows()) + " observations");
  }
  const std::size_t w = obs.cols();
  const std::size_t a = static_cast<std::size_t>(action_count);
  std::vector<double> x(obs.rows() * (w + a), 0.0);
  auto o = obs.data();
  for (std::size_t r = 0; r < obs.rows(); ++r) {
    if (actions[r] < 0 || actions[r] >= action_count) {
      throw std::out_of_range("critic_input: action id " + std::to_string(actions[r]) + " outside [0, " +
                              std::to_string(action_count) + ")");
    }
    std::copy_n(o.begin() + static_cast<std::ptrdiff_t>(r * w), w, x.begin() + static_cast<std::ptrdiff_t>(r * (w + a)));
    x[r * (w + a) + w + static_cast<std::size_t>(actions[r])] = 1.0;
  }
  return Tensor::from(obs.rows(), w + a, std::move(x));
}

CriticOutput CriticNet::forward(const Tensor& obs, std::span<const int> actions, std::size_t group) const {
  check_group("CriticNet", obs, group, arch_.obs_dim);
  CriticOutput out;
  out.embedding = embed_.forward(critic_input(scale(obs, arch_.input_scale), actions, arch_.action_count));
  auto att = attention_.forward(out.embedding, group);
  out.attended = att.concat;
  out.attention = std::move(att.weights);
  out.q = post_.forward(concat_cols({out.embedding, out.attended}));
  return out;
}

NamedParams CriticNet::parameters() const {
  NamedParams p;
  embed_.collect("critic/embed", p);
  attention_.collect("critic/attention", p);
  post_.collect("critic/post", p);
  return p;
}

NamedParams CriticNet::value_matrices() const {
  NamedParams p;
  for (std::size_t i = 0; i < attention_.heads().size(); ++i)
    p.emplace_back("critic/attention/" + std::to_string(i) + "/value", attention_.heads()[i].value);
  return p;
}

// ---- counterfactual baseline ----------------------------------------------

CounterfactualValues counterfactual_values(const ActorNet& actor, const CriticNet& critic, const Tensor& obs,
                                           std::span<const int> actions, std::size_t group,
                                           std::size_t chunk_groups) {
  NoGradGuard no_grad;
  if (actions.size() != obs.rows()) throw std::invalid_argument("counterfactual_values: action count mismatch");
  const std::size_t n = group;
  const std::size_t rows = obs.rows();
  const std::size_t groups = rows / n;
  const std::size_t A = static_cast<std::size_t>(critic.arch().action_count);
  const std::size_t w = obs.cols();
  const Tensor probs = actor.forward(obs, n).probs;

  CounterfactualValues cv;
  cv.baseline.assign(rows, 0.0);
  cv.q_all.assign(rows * A, 0.0);
  cv.q_taken.assign(rows, 0.0);
  if (chunk_groups == 0) chunk_groups = 1;

  auto o = obs.data();
  for (std::size_t g0 = 0; g0 < groups; g0 += chunk_groups) {
    const std::size_t g1 = std::min(groups, g0 + chunk_groups);
    // One expanded group per (group, agent, own action).
    const std::size_t expanded = (g1 - g0) * n * A;
    std::vector<double> xo;
    xo.reserve(expanded * n * w);
    std::vector<int> xa;
    xa.reserve(expanded * n);
    for (std::size_t g = g0; g < g1; ++g) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < A; ++a) {
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t r = g * n + j;
            xo.insert(xo.end(), o.begin() + static_cast<std::ptrdiff_t>(r * w), o.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
            xa.push_back(j == i ? static_cast<int>(a) : actions[r]);
          }
        }
      }
    }
    const Tensor q = critic.forward(Tensor::from(expanded * n, w, std::move(xo)), xa, n).q;
    auto qv = q.data();
    std::size_t e = 0;
    for (std::size_t g = g0; g < g1; ++g) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = g * n + i;
        double b = 0.0;
        for (std::size_t a = 0; a < A; ++a, ++e) {
          const double qi = qv[e * n + i];
          cv.q_all[r * A + a] = qi;
          b += probs.data()[r * A + a] * qi;
        }
        cv.baseline[r] = b;
        cv.q_taken[r] = cv.q_all[r * A + static_cast<std::size_t>(actions[r])];
      }
    }
  }
  return cv;
}

double counterfactual_baseline(std::size_t agent, const Tensor& obs, std::span<const int> actions,
                               const ActorNet& actor, const CriticNet& critic) {
  if (agent >= obs.rows()) throw std::out_of_range("counterfactual_baseline: agent index out of range");
  return counterfactual_values(actor, critic, obs, actions, obs.rows()).baseline[agent];
}

// ---- conformity -----------------------------------------------------------

Tensor conformity_loss(const Tensor& embeddings, std::size_t group, double theta_s, double theta_b, double eps) {
  if (group < 2) throw std::invalid_argument("conformity_loss: need at least two agents per group");
  if (embeddings.rows() % group != 0) {
    throw std::invalid_argument("conformity_loss: rows do not form groups of " + std::to_string(group));
  }
  const std::size_t groups = embeddings.rows() / group;
  const std::size_t pairs = group * (group - 1) / 2;
  std::vector<std::size_t> left, right;
  left.reserve(groups * pairs);
  right.reserve(groups * pairs);
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = 0; i < group; ++i)
      for (std::size_t j = i + 1; j < group; ++j) {
        left.push_back(g * group + i);
        right.push_back(g * group + j);
      }
  Tensor cos = cosine_similarity_rows(select_rows(embeddings, left), select_rows(embeddings, right), eps);
  Tensor per_group = mean_rows(reshape(cos, groups, pairs));
  return scale(mean(floor_at(per_group, theta_b)), theta_s);
}

}  // namespace taac
