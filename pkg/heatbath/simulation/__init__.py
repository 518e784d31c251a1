# 对于 simulation 包
