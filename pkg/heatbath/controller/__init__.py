# 对于 controller 包
