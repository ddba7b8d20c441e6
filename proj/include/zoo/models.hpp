#pragma once

#include "zoo/graph.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace zoo::models {

// Node-counting convention shared by every builder: one node per declared
// layer operation, the INPUT node included, and every node is profiled.
//
//   lenet5       INPUT + conv/tanh, avgpool, conv/tanh, avgpool, conv(120)/tanh,
//                dense(84)/tanh, dense(10)/softmax                  =   8
//   vgg16        INPUT + 13 conv + 13 relu + 5 maxpool + 3 dense
//                + 2 relu + 1 softmax                                =  38
//   inceptionv3  INPUT + 94 conv/bn/relu triplets + 13 pools
//                + 15 concats + global avgpool + dense(1000)/softmax = 313
//
// Dense layers flatten their input implicitly, so no FLATTEN node appears.

/// Classic LeNet-5 on a 1x32x32 input, 6-16-120 channel plan.
Graph build_lenet5();

/// VGG16 (configuration D) on 3x224x224.
Graph build_vgg16();

/// InceptionV3 on 3 x size x size (299 by default; any size >= 75 works
/// since the head pools globally). Convolutions carry no bias and
/// batchnorm has no scale, as in the reference topology.
Graph build_inceptionv3(std::int64_t image_size = 299);

/// Names accepted by build_model: "lenet5", "vgg16", "inceptionv3".
std::vector<std::string> model_names();
Graph build_model(std::string_view name);

struct ParamCount {
    std::int64_t count = 0;
    std::int64_t bytes = 0;
};

/// Sum over declared parameter slots; 4 bytes per f32 value.
ParamCount count_params(const Graph& graph);

/// Fills every slot from an xorshift64* stream seeded with `seed`, visiting
/// slots in declaration order. Xavier slots draw from
/// U(-b, b), b = sqrt(6 / (fan_in + fan_out)); uniform slots from their range.
ParamTable random_init(const Graph& graph, std::uint64_t seed);

/// Xavier bound for a slot, or the larger magnitude of its uniform range.
float init_bound(const ParamSpec& spec);

}  // namespace zoo::models
