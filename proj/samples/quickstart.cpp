// Features of one BBOB instance and a short CMA-ES run on it.

#include <iostream>

#include "hpoela/hpoela.hpp"

int main() {
  using namespace hpoela;
  const auto problem = bbob::make_problem(bbob::instantiate(15, 1, 2));

  const auto design = design::make_design(problem, 100, 7);
  const auto features = ela::compute_all(design::make_ela_sample(design));
  for (const auto& [name, value] : features.entries()) std::cout << name << " = " << value << "\n";

  opt::OptimizerSpec spec;
  spec.variant = opt::Variant::Cmaes;
  const auto trace = opt::run(spec, problem, 100, 1);
  std::cout << "cmaes best after " << trace.evals.size() << " evaluations: " << trace.final_best() << "\n";
}
