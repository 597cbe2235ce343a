#include "tsobs/fixtures.hpp"

#include "tsobs/errors.hpp"

namespace tsobs::fixtures {

namespace {

// Keep these byte-identical to models/example1.model and models/example2.model;
// test_model checks that the parsed structures agree.
const std::string kExample1 = R"({
  "n": 2,
  "m_u": 1,
  "q": 1,
  "r": 2,
  "l": 2,
  "premise_measured": true,
  "E": [
    [[1.0, 0.0], [0.0, 2.0]],
    [[1.0, 0.0], [0.0, 2.01]]
  ],
  "A": [
    [[-3.0, 1.0], [1.0, -1.0]],
    [[-2.0, 1.0], [1.0, 0.0]]
  ],
  "B": [
    [[-2.0], [1.0]],
    [[1.0], [1.0]]
  ],
  "C": [[1.0, 1.0]],
  "h": [
    {"kind": "tanh_sector", "state_index": 0, "sign": -1},
    {"kind": "complement", "of": 0}
  ],
  "v": [
    {"kind": "cos_product", "state_indices": [0, 1]},
    {"kind": "complement", "of": 0}
  ]
}
)";

const std::string kExample2 = R"({
  "n": 3,
  "m_u": 1,
  "q": 2,
  "r": 2,
  "l": 1,
  "premise_measured": false,
  "E": [
    [[1.0, 2.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]
  ],
  "A": [
    [[-2.0, 1.0, 1.0], [1.0, -3.0, 0.0], [2.0, 1.0, -6.0]],
    [[-3.0, 2.0, -2.0], [5.0, -3.0, 0.0], [0.5, 0.5, -4.0]]
  ],
  "B": [
    [[1.0], [0.5], [0.5]],
    [[0.5], [1.0], [0.5]]
  ],
  "C": [[1.0, 1.0, 1.0], [1.0, 0.0, 1.0]],
  "h": [
    {"kind": "tanh_sector", "state_index": 0, "sign": -1},
    {"kind": "complement", "of": 0}
  ],
  "v": [
    {"kind": "constant", "value": 1.0}
  ]
}
)";

const std::string kExample1Reference = R"({
  "theorem": 1,
  "P1": [[0.9875, -0.0266], [-0.0266, 1.2489]],
  "P3": [[0.2561, -0.0373], [0.0394, 0.3161]],
  "L": [
    [[-0.4898], [0.4323]],
    [[0.5255], [-0.1566]]
  ]
}
)";

const std::string kExample2Reference = R"({
  "theorem": 2,
  "P": [[1.2594, 0.2698, 0.4471], [0.2698, 1.4447, -0.0991], [0.4471, -0.0991, 0.7367]],
  "Q": [[1.5534, 0.0, -0.03], [0.0, 1.5235, 0.0], [-0.03, 0.0, 1.5534]],
  "L": [
    [[118.4894, 0.3110], [-101.6108, 336.9255], [-608.0136, 908.4754]],
    [[-421.6323, 106.0784], [93.6932, 266.3481], [-273.6247, 165.1607]]
  ],
  "lambda1": 0.5863,
  "lambda2": 0.0094,
  "gamma": 0.1575,
  "equality_mode": "none",
  "centroid_mode": "mean"
}
)";

}  // namespace

std::vector<std::string> bundled_model_names() { return {"example1", "example2"}; }

const std::string& bundled_model_text(const std::string& name) {
    if (name == "example1") return kExample1;
    if (name == "example2") return kExample2;
    fail(ErrorKind::UnknownFixture, "no bundled model named \"" + name + "\"");
}

TsDescriptorModel bundled_model(const std::string& name) { return parse_model(bundled_model_text(name)); }

const std::string& reference_certificate_text(const std::string& name) {
    if (name == "example1") return kExample1Reference;
    if (name == "example2") return kExample2Reference;
    fail(ErrorKind::UnknownFixture, "no reference certificate named \"" + name + "\"");
}

}  // namespace tsobs::fixtures
