#pragma once

#include "dgrom/affine.hpp"
#include "dgrom/archive.hpp"
#include "dgrom/config.hpp"
#include "dgrom/fom.hpp"
#include "dgrom/io.hpp"
#include "dgrom/online.hpp"
#include "dgrom/pod.hpp"
#include "dgrom/reduced.hpp"
#include "dgrom/sampling.hpp"
#include "dgrom/workflow.hpp"
