#pragma once

#include "iws/acquisition.hpp"
#include "iws/corpus.hpp"
#include "iws/end_classifier.hpp"
#include "iws/error.hpp"
#include "iws/feedback_model.hpp"
#include "iws/label_model.hpp"
#include "iws/lf.hpp"
#include "iws/linalg.hpp"
#include "iws/mlp.hpp"
#include "iws/session.hpp"
#include "iws/synthetic.hpp"
