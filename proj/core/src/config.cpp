#include "leap/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace leap::config {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for key " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  std::istringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(static_cast<T>(std::stoull(tok)));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' at line " +
                               std::to_string(line_no));
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    try {
      if (key == "task") {
        if (val == "lp" || val == "link_prediction")
          c.task = graph::Task::link_prediction;
        else if (val == "wsn" || val == "wsn_regression")
          c.task = graph::Task::wsn_regression;
        else
          throw std::runtime_error("config: unknown task " + val);
      } else if (key == "dataset") c.dataset = val;
      else if (key == "directed") c.directed = parse_bool(val, key);
      else if (key == "weighted") c.weighted = parse_bool(val, key);
      else if (key == "delimiter") c.delimiter = (val == "comma") ? ',' : ' ';
      else if (key == "test_fraction" || key == "delta") c.test_fraction = std::stod(val);
      else if (key == "lengths") c.lengths = parse_list<std::size_t>(val);
      else if (key == "cap") c.cap = std::stoull(val);
      else if (key == "respect_direction") c.respect_direction = parse_bool(val, key);
      else if (key == "aggregator") c.aggregator = val;
      else if (key == "embedding_dim") c.embedding_dim = std::stoull(val);
      else if (key == "dense_width") c.sizes.dense_width = std::stoull(val);
      else if (key == "inner_lstm") c.sizes.inner_lstm = std::stoull(val);
      else if (key == "outer_lstm") c.sizes.outer_lstm = std::stoull(val);
      else if (key == "conv_filters") c.sizes.conv_filters = std::stoull(val);
      else if (key == "edge_learner_layers") c.edge_learner_layers = std::stoull(val);
      else if (key == "hidden_width") c.hidden_width = std::stoull(val);
      else if (key == "hidden_activation") c.hidden_activation = val;
      else if (key == "use_edge_weights") c.use_edge_weights = parse_bool(val, key);
      else if (key == "pretrained_embeddings") c.pretrained_embeddings = val;
      else if (key == "finetune_embeddings") c.finetune_embeddings = parse_bool(val, key);
      else if (key == "node_features") c.node_features = val;
      else if (key == "lr") c.lr = std::stod(val);
      else if (key == "max_epochs") c.max_epochs = std::stoull(val);
      else if (key == "patience") c.patience = std::stoull(val);
      else if (key == "batch_size") c.batch_size = std::stoull(val);
      else if (key == "val_fraction") c.val_fraction = std::stod(val);
      else if (key == "seeds") c.seeds = parse_list<std::uint64_t>(val);
      else throw std::runtime_error("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config: bad value for key '" + key + "'");
    }
  }
  if (c.lengths.empty()) throw std::runtime_error("config: lengths is empty");
  if (c.cap < 1) throw std::runtime_error("config: cap must be >= 1");
  if (c.seeds.empty()) throw std::runtime_error("config: seeds is empty");
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return parse_config(in);
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "task = " << (task == graph::Task::link_prediction ? "lp" : "wsn") << '\n'
     << "dataset = " << dataset << '\n'
     << "directed = " << (directed ? "true" : "false") << '\n'
     << "weighted = " << (weighted ? "true" : "false") << '\n'
     << "delimiter = " << (delimiter == ',' ? "comma" : "whitespace") << '\n'
     << "test_fraction = " << test_fraction << '\n';
  os << "lengths = ";
  for (std::size_t i = 0; i < lengths.size(); ++i)
    os << (i ? "," : "") << lengths[i];
  os << '\n'
     << "cap = " << cap << '\n'
     << "respect_direction = " << (respect_direction ? "true" : "false") << '\n'
     << "aggregator = " << aggregator << '\n'
     << "embedding_dim = " << embedding_dim << '\n'
     << "dense_width = " << sizes.dense_width << '\n'
     << "inner_lstm = " << sizes.inner_lstm << '\n'
     << "outer_lstm = " << sizes.outer_lstm << '\n'
     << "conv_filters = " << sizes.conv_filters << '\n'
     << "edge_learner_layers = " << edge_learner_layers << '\n'
     << "hidden_width = " << hidden_width << '\n'
     << "hidden_activation = " << hidden_activation << '\n'
     << "use_edge_weights = " << (use_edge_weights ? "true" : "false") << '\n'
     << "pretrained_embeddings = " << pretrained_embeddings << '\n'
     << "finetune_embeddings = " << (finetune_embeddings ? "true" : "false") << '\n'
     << "node_features = " << node_features << '\n'
     << "lr = " << lr << '\n'
     << "max_epochs = " << max_epochs << '\n'
     << "patience = " << patience << '\n'
     << "batch_size = " << batch_size << '\n'
     << "val_fraction = " << val_fraction << '\n';
  os << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << '\n';
  return os.str();
}

std::uint64_t content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace leap::config
