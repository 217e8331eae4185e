import json

# COMPKIT START
par = {}
# COMPKIT END

print(json.dumps(par))
