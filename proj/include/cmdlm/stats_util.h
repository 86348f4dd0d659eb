// stats_util.h
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Small numeric routines backing the significance tests: binomial tails
// and chi-square tail probabilities via the regularized incomplete gamma.

#ifndef CMDLM_STATS_UTIL_H_
#define CMDLM_STATS_UTIL_H_

#include <cstdint>

namespace cmdlm {

// log of the binomial coefficient C(n, k).
double LogChoose(uint64_t n, uint64_t k);

// P(X <= k) for X ~ Binomial(n, p).
double BinomialCdf(uint64_t k, uint64_t n, double p);

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double GammaQ(double a, double x);

// Upper tail P(X > x) of a chi-square distribution with df degrees of
// freedom.
double ChiSquareTail(double x, int df);

}  // namespace cmdlm

#endif  // CMDLM_STATS_UTIL_H_
