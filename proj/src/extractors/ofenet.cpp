#include "ofe/extractors/ofenet.hpp"

#include "ofe/errors.hpp"

#include <cmath>

namespace ofe {
namespace {

const ArchSpec& validated(const ArchSpec& spec) {
  spec.validate();
  return spec;
}

void push_bn_state(const BatchNorm& bn, std::vector<NamedArray>& out) {
  out.push_back({bn.name() + ".moving_mean", bn.moving_mean()});
  out.push_back({bn.name() + ".moving_var", bn.moving_var()});
}

const NamedArray& find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw ConfigError("snapshot: missing array '" + name + "'");
}

void restore_matrix(const std::vector<NamedArray>& arrays, const std::string& name, Matrix& dst) {
  const auto& a = find_array(arrays, name);
  if (a.value.rows() != dst.rows() || a.value.cols() != dst.cols()) {
    throw ConfigError("snapshot: shape mismatch for '" + name + "'");
  }
  dst = a.value;
}

void restore_row(const std::vector<NamedArray>& arrays, const std::string& name, RowVector& dst) {
  const auto& a = find_array(arrays, name);
  if (a.value.size() != dst.size()) throw ConfigError("snapshot: shape mismatch for '" + name + "'");
  dst = Eigen::Map<const RowVector>(a.value.data(), a.value.size());
}

}  // namespace

FeatureBlock::FeatureBlock(std::string name, const ArchSpec& spec, Eigen::Index input_dim, Rng& rng,
                           const OfeOptions& options)
    : name_(std::move(name)),
      connectivity_(spec.connectivity),
      activation_(spec.activation),
      input_dim_(input_dim),
      output_dim_(input_dim + spec.total_increment) {
  const int layers = spec.layers_per_block;
  auto make_bn = [&](const std::string& n, Eigen::Index w) -> std::optional<BatchNorm> {
    if (!spec.use_batch_norm) return std::nullopt;
    return BatchNorm(n, w, options.bn_momentum, options.bn_epsilon);
  };
  for (int i = 0; i < layers; ++i) {
    const std::string lname = name_ + ".l" + std::to_string(i);
    Unit unit;
    switch (connectivity_) {
      case Connectivity::densenet: {
        const Eigen::Index w = spec.densenet_layer_width();
        const Eigen::Index in = input_dim_ + i * w;
        unit.first = DenseLayer(lname, in, w, Activation::identity, rng);
        unit.first_bn = make_bn(lname + ".bn", w);
        break;
      }
      case Connectivity::mlp: {
        const Eigen::Index in = i == 0 ? input_dim_ : output_dim_;
        unit.first = DenseLayer(lname, in, output_dim_, Activation::identity, rng);
        unit.first_bn = make_bn(lname + ".bn", output_dim_);
        break;
      }
      case Connectivity::resnet: {
        const Eigen::Index in = i == 0 ? input_dim_ : output_dim_;
        unit.first = DenseLayer(lname + ".a", in, output_dim_, Activation::identity, rng);
        unit.first_bn = make_bn(lname + ".a.bn", output_dim_);
        unit.second = DenseLayer(lname + ".b", output_dim_, output_dim_, Activation::identity, rng);
        unit.second_bn = make_bn(lname + ".b.bn", output_dim_);
        if (in != output_dim_) {
          unit.projection =
              DenseLayer(lname + ".proj", in, output_dim_, Activation::identity, rng, false);
        }
        break;
      }
    }
    units_.push_back(std::move(unit));
  }
}

Var FeatureBlock::normalized(Tape& tape, DenseLayer& layer, std::optional<BatchNorm>& bn, Var x,
                             const EncodeOptions& options) {
  Var y = layer.forward(tape, x, options.track);
  if (bn) y = bn->forward(tape, y, options.mode, options.track, options.update_stats);
  return y;
}

Var FeatureBlock::forward(Tape& tape, Var x, const EncodeOptions& options) {
  if (x.cols() != input_dim_) {
    throw ConfigError(name_ + ": expected input width " + std::to_string(input_dim_) + ", got " +
                      std::to_string(x.cols()));
  }
  for (auto& unit : units_) {
    switch (connectivity_) {
      case Connectivity::densenet: {
        Var h = activate(normalized(tape, unit.first, unit.first_bn, x, options), activation_);
        x = concat(x, h);
        break;
      }
      case Connectivity::mlp:
        x = activate(normalized(tape, unit.first, unit.first_bn, x, options), activation_);
        break;
      case Connectivity::resnet: {
        Var h = activate(normalized(tape, unit.first, unit.first_bn, x, options), activation_);
        Var s = normalized(tape, *unit.second, unit.second_bn, h, options);
        Var skip = unit.projection ? unit.projection->forward(tape, x, options.track) : x;
        x = activate(add(s, skip), activation_);
        break;
      }
    }
    if (!x.value().allFinite()) {
      throw NumericError(unit.first.name() + ": non-finite block output");
    }
  }
  return x;
}

std::vector<LayerParamCount> FeatureBlock::param_counts() const {
  std::vector<LayerParamCount> out;
  for (const auto& unit : units_) {
    LayerParamCount c;
    c.name = unit.first.name();
    c.input_units = unit.first.in_features();
    c.output_units = unit.first.out_features();
    c.params = unit.first.param_count() + (unit.first_bn ? unit.first_bn->param_count() : 0);
    if (unit.second) c.params += unit.second->param_count();
    if (unit.second_bn) c.params += unit.second_bn->param_count();
    if (unit.projection) c.params += unit.projection->param_count();
    out.push_back(c);
  }
  return out;
}

std::vector<Parameter*> FeatureBlock::parameters() {
  std::vector<Parameter*> out;
  auto append = [&out](std::vector<Parameter*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  for (auto& unit : units_) {
    append(unit.first.parameters());
    if (unit.first_bn) append(unit.first_bn->parameters());
    if (unit.second) append(unit.second->parameters());
    if (unit.second_bn) append(unit.second_bn->parameters());
    if (unit.projection) append(unit.projection->parameters());
  }
  return out;
}

void FeatureBlock::collect_state(std::vector<NamedArray>& out) {
  for (auto* p : parameters()) out.push_back({p->name, p->value});
  for (auto& unit : units_) {
    if (unit.first_bn) push_bn_state(*unit.first_bn, out);
    if (unit.second_bn) push_bn_state(*unit.second_bn, out);
  }
}

void FeatureBlock::restore_state(const std::vector<NamedArray>& arrays) {
  for (auto* p : parameters()) restore_matrix(arrays, p->name, p->value);
  auto restore_bn = [&arrays](BatchNorm& bn) {
    restore_row(arrays, bn.name() + ".moving_mean", bn.moving_mean());
    restore_row(arrays, bn.name() + ".moving_var", bn.moving_var());
  };
  for (auto& unit : units_) {
    if (unit.first_bn) restore_bn(*unit.first_bn);
    if (unit.second_bn) restore_bn(*unit.second_bn);
  }
}

OfeNet::OfeNet(ArchSpec spec, std::uint64_t seed, OfeOptions options)
    : spec_(validated(spec)),
      target_indices_(spec_.predicted_indices()),
      rng_(seed),
      phi_o_("ofe.phi_o", spec_, spec_.obs_dim, rng_, options),
      phi_oa_("ofe.phi_oa", spec_, phi_o_.output_dim() + spec_.action_dim, rng_, options),
      pred_head_("ofe.pred", phi_oa_.output_dim(),
                 static_cast<Eigen::Index>(target_indices_.size()), Activation::identity, rng_) {
  optimizer_ = Adam(parameters(), options.adam);
}

Var OfeNet::encode_obs(Tape& tape, Var obs, const EncodeOptions& options) {
  if (obs.cols() != spec_.obs_dim) {
    throw ConfigError("ofe: observation width " + std::to_string(obs.cols()) + ", expected " +
                      std::to_string(spec_.obs_dim));
  }
  require_finite(obs.value(), "ofe input");
  return phi_o_.forward(tape, obs, options);
}

Var OfeNet::encode_obs_action(Tape& tape, Var z_o, Var action, const EncodeOptions& options) {
  if (z_o.cols() != z_o_dim() || action.cols() != spec_.action_dim) {
    throw ConfigError("ofe: representation/action width mismatch (" + std::to_string(z_o.cols()) +
                      ", " + std::to_string(action.cols()) + ")");
  }
  require_finite(action.value(), "ofe action input");
  return phi_oa_.forward(tape, concat(z_o, action), options);
}

std::vector<Parameter*> OfeNet::representation_parameters() {
  auto out = phi_o_.parameters();
  auto oa = phi_oa_.parameters();
  out.insert(out.end(), oa.begin(), oa.end());
  return out;
}

std::vector<Parameter*> OfeNet::parameters() {
  auto out = representation_parameters();
  auto head = pred_head_.parameters();
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

Var OfeNet::predict(Tape& tape, Var z_oa, bool track) { return pred_head_.forward(tape, z_oa, track); }

Var OfeNet::aux_loss(Tape& tape, const Batch& batch, const EncodeOptions& options) {
  if (batch.size() == 0) throw UsageError("ofe: auxiliary loss on an empty batch");
  Var z_o = encode_obs(tape, tape.constant(batch.obs), options);
  Var z_oa = encode_obs_action(tape, z_o, tape.constant(batch.actions), options);
  Var pred = predict(tape, z_oa, options.track);
  Var target = tape.constant(select_columns(batch.next_obs, target_indices_));
  return squared_error(pred, target);
}

double OfeNet::auxiliary_loss(const Batch& batch, BnMode mode) {
  Tape tape;
  return aux_loss(tape, batch, EncodeOptions{mode, false, false}).value()(0, 0);
}

double OfeNet::train_step(const Batch& batch) {
  try {
    optimizer_.zero_grad();
    Tape tape;
    Var loss = aux_loss(tape, batch, EncodeOptions{BnMode::train, true, true});
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) throw NumericError("non-finite auxiliary loss");
    tape.backward(loss);
    optimizer_.step();
    return value;
  } catch (const NumericError& e) {
    throw NumericError("ofe train step " + std::to_string(optimizer_.step_count() + 1) + ": " +
                       e.what());
  }
}

std::vector<NamedArray> OfeNet::state() {
  std::vector<NamedArray> out;
  phi_o_.collect_state(out);
  phi_oa_.collect_state(out);
  for (auto* p : pred_head_.parameters()) out.push_back({p->name, p->value});
  return out;
}

void OfeNet::load_state(const std::vector<NamedArray>& arrays) {
  phi_o_.restore_state(arrays);
  phi_oa_.restore_state(arrays);
  for (auto* p : pred_head_.parameters()) restore_matrix(arrays, p->name, p->value);
}

ExtractorParamCount OfeNet::param_count() const {
  ExtractorParamCount c;
  c.phi_o = phi_o_.param_counts();
  c.phi_oa = phi_oa_.param_counts();
  for (const auto& l : c.phi_o) c.phi_o_total += l.params;
  for (const auto& l : c.phi_oa) c.phi_oa_total += l.params;
  c.pred_head = pred_head_.param_count();
  c.total = c.phi_o_total + c.phi_oa_total + c.pred_head;
  return c;
}

std::unique_ptr<OfeNet> build_feature_extractor(const ArchSpec& spec, std::uint64_t seed,
                                                OfeOptions options) {
  return std::make_unique<OfeNet>(spec, seed, options);
}

Matrix select_columns(const Matrix& m, const std::vector<Eigen::Index>& indices) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = m.col(indices[j]);
  }
  return out;
}

}  // namespace ofe
