// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace setupkit {

double normal_pdf(double z);
double normal_cdf(double z);

/// Standard normal quantile (Wichura's AS 241, PPND16). Returns -inf/+inf at 0/1.
double normal_quantile(double p);

}  // namespace setupkit
