"""Shared fixtures: reference sources, ranges, peaks, and the golden block."""

from __future__ import annotations

import pytest

from counterscope.metrics import NormRanges, load_peaks

# The canonical serialized counter block: fixed 14-key order, 3-decimal strings.
GOLDEN_BLOCK = """{
"compiler_flags": "--std=c++17 -O3 -ffast-math",
"architecture": "gfx90a",
"L1_Cache_Arithmetic_Intensity": "0.002",
"L2_Cache_Arithmetic_Intensity": "0.002",
"HBM_Arithmetic_Intensity": "0.004",
"L1_Cache_GFLOPS": "0.459",
"L2_Cache_GFLOPS": "0.459",
"HBM_GFLOPS": "0.459",
"L1_Cache_Bandwidth": "0.089",
"L2_Cache_Bandwidth": "0.070",
"L2_Fabric_Write_BW": "0.022",
"L2_Fabric_Read_BW": "0.022",
"L1_Cache_Hit_Rate": "0.500",
"L2_Cache_Hit_Rate": "0.370"
}"""

GOLDEN_FLAGS = "--std=c++17 -O3 -ffast-math"
GOLDEN_ARCH = "gfx90a"

# Reference shape of a generated kernel: one load, fused multiply-add, one store.
SINGLE_FMA_SOURCE = r"""#include <cstdint>
#include <iostream>

#include <hip/hip_runtime.h>
#include <hip/hip_runtime_api.h>
#include <thrust/device_vector.h>

__global__ void generated_kernel(double *input_0, double *output_0) {
  auto thread_id = threadIdx.x + blockIdx.x * blockDim.x;
  auto var_0 = input_0[thread_id];
  auto var_1 = var_0 * var_0 + var_0;
  output_0[thread_id] = var_1;
}

int main(int, char **) {
  thrust::device_vector<double> input_0(102528, 1);
  thrust::device_vector<double> output_0(102528, 1);

  std::size_t block_size{256};
  std::size_t input_size{102528};
  std::size_t num_blocks{(input_size + block_size - 1) / block_size};

  generated_kernel<<<num_blocks, block_size>>>(
      input_0.data().get(), output_0.data().get());

  auto status = hipDeviceSynchronize();
  if (status != hipSuccess) {
    std::cout << "kernel launch failed\n";
  }
}
"""

# Hand-written grid-stride elementwise add (2 loads, 1 add, 1 store per iteration).
GRID_STRIDE_SOURCE = r"""#include <thrust/device_vector.h>
#include <cstdint>
#include <iostream>

__global__ void add(double* v_a, double* v_b, double* result,
                    std::size_t count) {
 const auto thread_id = threadIdx.x + blockIdx.x * blockDim.x;
 const auto stride = blockDim.x * gridDim.x;
 for (auto id = thread_id; id < count; id += stride) {
  result[id] = v_a[id] + v_b[id];
 }
}

int main() {
 const std::size_t count{1'000'000};
 thrust::device_vector<double> v_a(count, 1);
 thrust::device_vector<double> v_b(count, 3);
 thrust::device_vector<double> result(count);
 const std::size_t block_size{512};
 const std::size_t num_blocks{1024};
 add<<<num_blocks, block_size>>>(
 v_a.data().get(), v_b.data().get(), result.data().get(), count);
 const auto status = hipDeviceSynchronize();
 if (status != hipSuccess || result[0] != 4 || result[count - 1] != 4) {
  std::cout << "Kernel failed.\n";
  return -1;} else {
  std::cout << "Success!\n";}}
"""

# AI-generated style reduction kernel with atomics and an if-guard.
REDUCTION_SOURCE = r"""#include <hip/hip_runtime.h>
#include <iostream>
#include <vector>

__global__ void reduce_kernel(float* input, float* output, int n) {
 unsigned int i = blockIdx.x * blockDim.x + threadIdx.x;
 if (i < n) {
  atomicAdd(output, input[i]);
 }
}

int main() {
 const int N = 1 << 24;
 const int threadsPerBlock = 1024;
 const int blocks = (N + threadsPerBlock - 1) / threadsPerBlock;
 size_t size = N * sizeof(float);
 std::vector<float> h_input(N, 1.0f);
 float* d_input;
 float* d_output;
 hipMalloc(&d_input, size);
 hipMalloc(&d_output, sizeof(float));
 hipMemcpy(d_input, h_input.data(), size, hipMemcpyHostToDevice);
 hipMemset(d_output, 0, sizeof(float));
 reduce_kernel<<<blocks, threadsPerBlock>>>(d_input, d_output, N);
 float h_output;
 hipMemcpy(&h_output, d_output, sizeof(float), hipMemcpyDeviceToHost);
 std::cout << "Sum: " << h_output << std::endl;
 hipFree(d_input);
 hipFree(d_output);
}
"""


@pytest.fixture(scope="session")
def ranges():
    return NormRanges.default()


@pytest.fixture(scope="session")
def peaks_table():
    return load_peaks()


@pytest.fixture(scope="session")
def gfx90a_peaks(peaks_table):
    return peaks_table["gfx90a"]
