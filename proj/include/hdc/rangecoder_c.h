// Copyright (c) the hdcsvc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HDC_RANGECODER_C_H_
#define HDC_RANGECODER_C_H_

/* C boundary to the external range coder.
 *
 * Symbols are mean-subtracted slice offsets in raster order (channel, row,
 * column). The coder models symbol k of element i with the Gaussian bin mass
 * over [k - 0.5, k + 0.5] centred at mu[i] with scale sigma[i]; symbols in
 * [-64, 64] use 16-bit tables, anything else takes the escape path (bypass
 * sign bit and Exp-Golomb magnitude).
 *
 * hdc_rc_encode: *out_len holds the capacity of out_buf on entry and the
 * number of bytes written on return.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum hdc_rc_status {
  HDC_RC_OK = 0,
  HDC_RC_BAD_ARGUMENT = 1,
  HDC_RC_BUFFER_TOO_SMALL = 2,
  HDC_RC_INVALID_SIGMA = 3,
  HDC_RC_STREAM_EXHAUSTED = 4,
  HDC_RC_CORRUPT_STREAM = 5
};

int hdc_rc_encode(const int16_t* symbols, size_t n, const float* mu, const float* sigma, uint8_t* out_buf,
                  size_t* out_len);
int hdc_rc_decode(const uint8_t* buf, size_t len, size_t n, const float* mu, const float* sigma,
                  int16_t* out_symbols);

#ifdef __cplusplus
}
#endif

#endif /* HDC_RANGECODER_C_H_ */
