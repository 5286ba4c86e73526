#pragma once

#include "ebrl/model.hpp"
#include "ebrl/strdist.hpp"
#include "ebrl/rng.hpp"
#include "ebrl/posterior.hpp"
#include "ebrl/gibbs.hpp"
#include "ebrl/enumerate.hpp"
#include "ebrl/linkage.hpp"
#include "ebrl/eval.hpp"
#include "ebrl/klbounds.hpp"
#include "ebrl/csv.hpp"
#include "ebrl/schema.hpp"
#include "ebrl/synthetic.hpp"
#include "ebrl/log_io.hpp"
