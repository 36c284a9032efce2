#include <cmath>

#include "okgc/diff_engine.hpp"
#include "okgc/errors.hpp"

namespace okgc::ad {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("Adam learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

Var& ParamStore::add(const std::string& name, Matrix init) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  Entry e;
  e.m = Matrix::Zero(init.rows(), init.cols());
  e.v = Matrix::Zero(init.rows(), init.cols());
  e.var = leaf(std::move(init), false);
  order_.push_back(name);
  return entries_.emplace(name, std::move(e)).first->second.var;
}

Var& ParamStore::add_var(const std::string& name, Var var) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  Entry e;
  e.m = Matrix::Zero(var.rows(), var.cols());
  e.v = Matrix::Zero(var.rows(), var.cols());
  e.var = std::move(var);
  order_.push_back(name);
  return entries_.emplace(name, std::move(e)).first->second.var;
}

Var& ParamStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second.var;
}

const Var& ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second.var;
}

void ParamStore::set_trainable(const std::string& name, bool on) { get(name).set_requires_grad(on); }

void ParamStore::set_trainable(const std::vector<std::string>& names, bool on) {
  for (const auto& n : names) set_trainable(n, on);
}

void ParamStore::freeze_all() {
  for (auto& [name, e] : entries_) e.var.set_requires_grad(false);
}

bool ParamStore::trainable(const std::string& name) const { return get(name).requires_grad(); }

void ParamStore::zero_grad() {
  for (auto& [name, e] : entries_) {
    auto& g = e.var.mutable_grad();
    if (e.var.requires_grad())
      g = Matrix::Zero(e.var.rows(), e.var.cols());
    else
      g.resize(0, 0);
  }
}

void ParamStore::clear_grad() {
  for (auto& [name, e] : entries_) e.var.mutable_grad().resize(0, 0);
}

long ParamStore::step_count(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second.step;
}

void adam_step(ParamStore& params, const AdamConfig& cfg) {
  cfg.validate();
  for (const auto& name : params.order_) {
    auto& e = params.entries_.at(name);
    if (!e.var.requires_grad()) continue;
    const Matrix& g = e.var.grad();
    if (g.size() == 0) throw ContractError("no gradient for trainable parameter '" + name + "'");
    ++e.step;
    e.m = cfg.beta1 * e.m + (1.0 - cfg.beta1) * g;
    e.v = cfg.beta2 * e.v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
    Matrix& p = e.var.mutable_value();
    p.array() -= cfg.lr * (e.m.array() / c1) / ((e.v.array() / c2).sqrt() + cfg.eps);
  }
  params.clear_grad();
}

}  // namespace okgc::ad
