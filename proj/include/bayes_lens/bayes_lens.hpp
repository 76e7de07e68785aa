#pragma once

#include "bayes_lens/errors.hpp"
#include "bayes_lens/sample_store.hpp"
#include "bayes_lens/influence.hpp"
#include "bayes_lens/leverage.hpp"
#include "bayes_lens/outliers.hpp"
#include "bayes_lens/linear_oracle.hpp"
#include "bayes_lens/report.hpp"
