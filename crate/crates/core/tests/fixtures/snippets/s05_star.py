pass
pass
pass